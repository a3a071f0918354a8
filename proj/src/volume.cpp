#include <sulcikit/volume.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sulcikit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::NonIntegerLabels: return "NonIntegerLabels";
    case ErrorCode::EmptyVolume: return "EmptyVolume";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MissingSubstitution: return "MissingSubstitution";
    case ErrorCode::MissingPrior: return "MissingPrior";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BothEmpty: return "BothEmpty";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NoValidEntries: return "NoValidEntries";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Affine identity_affine() { return diagonal_affine({1.0, 1.0, 1.0}); }

Affine diagonal_affine(const Vec3& spacing) {
  Affine m{};
  m[0] = spacing[0];
  m[5] = spacing[1];
  m[10] = spacing[2];
  m[15] = 1.0;
  return m;
}

Affine multiply(const Affine& a, const Affine& b) {
  Affine out{};
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += a[r * 4 + k] * b[k * 4 + c];
      out[r * 4 + c] = acc;
    }
  }
  return out;
}

Vec3 apply(const Affine& m, const Vec3& p) {
  Vec3 out{};
  for (int r = 0; r < 3; ++r) {
    out[r] = m[r * 4 + 0] * p[0] + m[r * 4 + 1] * p[1] + m[r * 4 + 2] * p[2] + m[r * 4 + 3];
  }
  return out;
}

VoxelGrid::VoxelGrid(const Index3& s, const Vec3& sp)
    : shape(s), spacing(sp), affine(diagonal_affine(sp)) {
  validate();
}

VoxelGrid::VoxelGrid(const Index3& s, const Vec3& sp, const Affine& a)
    : shape(s), spacing(sp), affine(a) {
  validate();
}

Index3 VoxelGrid::coords(std::size_t linear_index) const {
  const auto i = static_cast<std::int64_t>(linear_index);
  return {i % shape[0], (i / shape[0]) % shape[1], i / (shape[0] * shape[1])};
}

void VoxelGrid::validate() const {
  for (int a = 0; a < 3; ++a) {
    if (shape[a] < 1) throw Error(ErrorCode::InvalidArgument, "grid shape entries must be >= 1");
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw Error(ErrorCode::InvalidArgument, "grid spacing entries must be positive");
    }
    const double norm = std::sqrt(affine[a] * affine[a] + affine[4 + a] * affine[4 + a] +
                                  affine[8 + a] * affine[8 + a]);
    if (std::abs(norm - spacing[a]) > 1e-5 * spacing[a]) {
      throw Error(ErrorCode::InvalidArgument, "affine column norms disagree with spacing");
    }
  }
}

bool same_geometry(const VoxelGrid& a, const VoxelGrid& b, double tol) {
  if (a.shape != b.shape) return false;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(a.spacing[i] - b.spacing[i]) > tol) return false;
  }
  for (int i = 0; i < 16; ++i) {
    if (std::abs(a.affine[i] - b.affine[i]) > tol) return false;
  }
  return true;
}

void require_same_grid(const VoxelGrid& a, const VoxelGrid& b, const char* context) {
  if (!same_geometry(a, b, 1e-5)) {
    throw Error(ErrorCode::GridMismatch, std::string(context) + ": volumes are on different grids");
  }
}

LabelSet labels_present(const LabelVolume& labels) {
  std::vector<bool> seen(65536, false);
  for (auto v : labels.voxels) seen[v] = true;
  LabelSet out;
  for (std::size_t l = 0; l < seen.size(); ++l) {
    if (seen[l]) out.insert(static_cast<std::uint16_t>(l));
  }
  return out;
}

std::size_t count(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.voxels.begin(), mask.voxels.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

BinaryMask binarize(const LabelVolume& labels, const LabelSet& label_set) {
  std::vector<std::uint8_t> lut(65536, 0);
  for (auto l : label_set) lut[l] = 1;
  BinaryMask out(labels.grid);
  for (std::size_t i = 0; i < labels.size(); ++i) out.voxels[i] = lut[labels.voxels[i]];
  return out;
}

BinaryMask nonzero_mask(const LabelVolume& labels) {
  BinaryMask out(labels.grid);
  for (std::size_t i = 0; i < labels.size(); ++i) out.voxels[i] = labels.voxels[i] != 0 ? 1 : 0;
  return out;
}

template <typename T>
Cropped<T> crop_to_content(const Volume<T>& volume, std::int64_t margin) {
  if (volume.size() == 0) throw Error(ErrorCode::EmptyVolume, "volume has no voxels");
  if (margin < 0) throw Error(ErrorCode::InvalidArgument, "margin must be >= 0");
  const auto& shape = volume.grid.shape;
  Index3 lo{shape[0], shape[1], shape[2]};
  Index3 hi{-1, -1, -1};
  for (std::int64_t z = 0; z < shape[2]; ++z) {
    for (std::int64_t y = 0; y < shape[1]; ++y) {
      for (std::int64_t x = 0; x < shape[0]; ++x) {
        if (volume(x, y, z) == T{}) continue;
        const Index3 p{x, y, z};
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
    }
  }
  if (hi[0] < 0) throw Error(ErrorCode::EmptyVolume, "all voxels are zero");

  Index3 new_shape{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, lo[a] - margin);
    hi[a] = std::min<std::int64_t>(shape[a] - 1, hi[a] + margin);
    new_shape[a] = hi[a] - lo[a] + 1;
  }

  Affine shift = identity_affine();
  shift[3] = static_cast<double>(lo[0]);
  shift[7] = static_cast<double>(lo[1]);
  shift[11] = static_cast<double>(lo[2]);
  VoxelGrid grid(new_shape, volume.grid.spacing, multiply(volume.grid.affine, shift));

  Cropped<T> out{Volume<T>(grid), lo};
  for (std::int64_t z = 0; z < new_shape[2]; ++z) {
    for (std::int64_t y = 0; y < new_shape[1]; ++y) {
      for (std::int64_t x = 0; x < new_shape[0]; ++x) {
        out.volume(x, y, z) = volume(x + lo[0], y + lo[1], z + lo[2]);
      }
    }
  }
  return out;
}

template Cropped<float> crop_to_content(const Volume<float>&, std::int64_t);
template Cropped<std::uint16_t> crop_to_content(const Volume<std::uint16_t>&, std::int64_t);
template Cropped<std::uint8_t> crop_to_content(const Volume<std::uint8_t>&, std::int64_t);
template Cropped<double> crop_to_content(const Volume<double>&, std::int64_t);

namespace {

bool inside_extent(const VoxelGrid& grid, const Vec3& p) {
  for (int a = 0; a < 3; ++a) {
    const double n = static_cast<double>(grid.shape[a]);
    if (!(p[a] >= -0.5 && p[a] <= n - 0.5)) return false;
  }
  return true;
}

std::int64_t clamp_index(std::int64_t i, std::int64_t n) { return std::clamp<std::int64_t>(i, 0, n - 1); }

VoxelGrid resampled_grid(const VoxelGrid& src, const Index3& target_shape, Vec3& ratio) {
  for (int a = 0; a < 3; ++a) {
    if (target_shape[a] < 1) throw Error(ErrorCode::InvalidArgument, "target shape entries must be >= 1");
  }
  Affine scale = identity_affine();
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    ratio[a] = static_cast<double>(src.shape[a]) / static_cast<double>(target_shape[a]);
    spacing[a] = src.spacing[a] * ratio[a];
    scale[a * 4 + a] = ratio[a];
    scale[a * 4 + 3] = 0.5 * ratio[a] - 0.5;
  }
  return VoxelGrid(target_shape, spacing, multiply(src.affine, scale));
}

template <typename T, typename Sampler>
Volume<T> resample_with(const Volume<T>& volume, const Index3& target_shape, Sampler&& sample) {
  Vec3 ratio{};
  Volume<T> out(resampled_grid(volume.grid, target_shape, ratio));
  if (target_shape == volume.grid.shape) {
    out.voxels = volume.voxels;
    return out;
  }
  for (std::int64_t z = 0; z < target_shape[2]; ++z) {
    for (std::int64_t y = 0; y < target_shape[1]; ++y) {
      for (std::int64_t x = 0; x < target_shape[0]; ++x) {
        const Vec3 p{(x + 0.5) * ratio[0] - 0.5, (y + 0.5) * ratio[1] - 0.5, (z + 0.5) * ratio[2] - 0.5};
        out(x, y, z) = sample(volume, p);
      }
    }
  }
  return out;
}

}  // namespace

double sample_trilinear(const IntensityVolume& volume, const Vec3& p) {
  const auto& g = volume.grid;
  if (!inside_extent(g, p)) return 0.0;
  std::int64_t i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double fl = std::floor(p[a]);
    i0[a] = static_cast<std::int64_t>(fl);
    f[a] = p[a] - fl;
  }
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const double wz = dz ? f[2] : 1.0 - f[2];
    if (wz == 0.0) continue;
    const auto z = clamp_index(i0[2] + dz, g.shape[2]);
    for (int dy = 0; dy < 2; ++dy) {
      const double wy = dy ? f[1] : 1.0 - f[1];
      if (wy == 0.0) continue;
      const auto y = clamp_index(i0[1] + dy, g.shape[1]);
      for (int dx = 0; dx < 2; ++dx) {
        const double wx = dx ? f[0] : 1.0 - f[0];
        if (wx == 0.0) continue;
        const auto x = clamp_index(i0[0] + dx, g.shape[0]);
        acc += wx * wy * wz * static_cast<double>(volume(x, y, z));
      }
    }
  }
  return acc;
}

template <typename T>
T sample_nearest(const Volume<T>& volume, const Vec3& p) {
  const auto& g = volume.grid;
  if (!inside_extent(g, p)) return T{};
  return volume(clamp_index(static_cast<std::int64_t>(std::floor(p[0] + 0.5)), g.shape[0]),
                clamp_index(static_cast<std::int64_t>(std::floor(p[1] + 0.5)), g.shape[1]),
                clamp_index(static_cast<std::int64_t>(std::floor(p[2] + 0.5)), g.shape[2]));
}

template float sample_nearest(const Volume<float>&, const Vec3&);
template std::uint16_t sample_nearest(const Volume<std::uint16_t>&, const Vec3&);
template std::uint8_t sample_nearest(const Volume<std::uint8_t>&, const Vec3&);

IntensityVolume resample(const IntensityVolume& volume, const Index3& target_shape,
                         Interpolation mode) {
  if (mode == Interpolation::Nearest) {
    return resample_with(volume, target_shape,
                         [](const IntensityVolume& v, const Vec3& p) { return sample_nearest(v, p); });
  }
  return resample_with(volume, target_shape, [](const IntensityVolume& v, const Vec3& p) {
    return static_cast<float>(sample_trilinear(v, p));
  });
}

LabelVolume resample(const LabelVolume& volume, const Index3& target_shape, Interpolation mode) {
  if (mode != Interpolation::Nearest) {
    throw Error(ErrorCode::ModeMismatch, "label volumes can only be resampled with nearest-neighbour");
  }
  return resample_with(volume, target_shape,
                       [](const LabelVolume& v, const Vec3& p) { return sample_nearest(v, p); });
}

}  // namespace sulcikit
