#include <sulcikit/phantom.hpp>

#include <cmath>

namespace sulcikit::phantom {

LabelVolume make_phantom(const Index3& shape, int subject) {
  LabelVolume out(VoxelGrid(shape, {1.0, 1.0, 1.0}));
  const double cx = (shape[0] - 1) / 2.0, cy = (shape[1] - 1) / 2.0, cz = (shape[2] - 1) / 2.0;
  const double wobble = 0.03 * std::sin(1.7 * subject + 0.3);
  const double rx = 0.44 * shape[0] * (1.0 + wobble);
  const double ry = 0.44 * shape[1] * (1.0 - wobble);
  const double rz = 0.44 * shape[2];
  const double phase = 0.9 * subject;

  for (std::int64_t z = 0; z < shape[2]; ++z) {
    for (std::int64_t y = 0; y < shape[1]; ++y) {
      for (std::int64_t x = 0; x < shape[0]; ++x) {
        const double u = (x - cx) / rx, v = (y - cy) / ry, w = (z - cz) / rz;
        const double r = std::sqrt(u * u + v * v + w * w);
        const double azimuth = std::atan2(v, u);
        const double elevation = std::atan2(w, std::sqrt(u * u + v * v));
        // Gyral folding modulates the WM/GM boundary only.
        const double fold = 0.07 * std::sin(7.0 * azimuth + phase) * std::cos(5.0 * elevation);

        std::uint16_t label = 0;
        if (r < 0.62 + fold) label = kWhiteMatter;
        else if (r < 0.88) label = kGreyMatter;
        else if (r < 1.0) label = kCsf;

        if (label == kGreyMatter && z > cz && std::abs(x - cx) > 2.0) {
          // Sulcal sheet: a wavy coronal-ish surface, slanted with height.
          const double course = cy + 0.08 * shape[1] + 2.0 * std::sin(0.35 * x + phase) + 0.35 * (z - cz);
          if (std::abs(y - course) < 0.75) label = x < cx ? kLeftCentralSulcus : kRightCentralSulcus;
        }
        out(x, y, z) = label;
      }
    }
  }
  return out;
}

}  // namespace sulcikit::phantom
