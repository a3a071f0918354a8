#include <sulcikit/synth.hpp>

#include <sulcikit/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace sulcikit::synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stage indices for per-stage seed derivation inside generate_sample.
enum Stage : std::uint64_t { kAffine = 0, kElastic = 1, kIntensity = 2, kBlur = 3, kBias = 4 };

double standard_normal(Rng& rng, std::normal_distribution<double>& dist) { return dist(rng); }

void check_range(const Range& r, const char* name) {
  if (!r.valid() || !std::isfinite(r.low) || !std::isfinite(r.high)) {
    throw Error(ErrorCode::ConfigError, std::string(name) + ": range must be finite with low <= high");
  }
}

void check_lattice(const std::array<int, 3>& g, const char* name) {
  for (int v : g) {
    if (v < 2) throw Error(ErrorCode::ConfigError, std::string(name) + ": entries must be >= 2");
  }
}

std::vector<double> random_lattice(Rng& rng, const std::array<int, 3>& shape, double sigma) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2]);
  for (auto& v : values) v = sigma * standard_normal(rng, normal);
  return values;
}

struct AxisWeights {
  std::vector<int> lower;
  std::vector<double> frac;
};

AxisWeights axis_weights(int control, std::int64_t target) {
  AxisWeights w;
  w.lower.resize(static_cast<std::size_t>(target));
  w.frac.resize(static_cast<std::size_t>(target));
  for (std::int64_t i = 0; i < target; ++i) {
    const double t = target > 1 ? static_cast<double>(i) * (control - 1) / static_cast<double>(target - 1) : 0.0;
    int lo = std::min(static_cast<int>(std::floor(t)), control - 2);
    lo = std::max(lo, 0);
    w.lower[static_cast<std::size_t>(i)] = lo;
    w.frac[static_cast<std::size_t>(i)] = t - lo;
  }
  return w;
}

// Half-sample symmetric reflection: ... c b a | a b c ... | c b a ...
std::int64_t reflect(std::int64_t i, std::int64_t n) {
  const std::int64_t period = 2 * n;
  std::int64_t m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

}  // namespace

std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index));
}

double uniform(Rng& rng, const Range& range) {
  const double u = std::generate_canonical<double, 53>(rng);
  return range.low + (range.high - range.low) * u;
}

void TissuePriors::validate() const {
  for (const auto& [label, p] : entries) {
    const std::string name = "prior for label " + std::to_string(label);
    check_range(p.mean_range, name.c_str());
    check_range(p.std_range, name.c_str());
    if (p.std_range.low < 0.0) throw Error(ErrorCode::ConfigError, name + ": std_range must be >= 0");
  }
}

TissuePriors default_t1w_priors() {
  TissuePriors p;
  p.entries[1] = {{20, 40}, {3, 10}};
  p.entries[2] = {{90, 110}, {3, 10}};
  p.entries[3] = {{140, 160}, {3, 10}};
  return p;
}

GeneratorConfig GeneratorConfig::deterministic() {
  GeneratorConfig c;
  c.rotation_range.fill(Range::fixed(0.0));
  c.scaling_range.fill(Range::fixed(1.0));
  c.shear_range = Range::fixed(0.0);
  c.translation_range.fill(Range::fixed(0.0));
  c.elastic_std_range = Range::fixed(0.0);
  c.blur_sigma_range = Range::fixed(0.0);
  c.bias_std_range = Range::fixed(0.0);
  return c;
}

void GeneratorConfig::validate() const {
  for (const auto& r : rotation_range) check_range(r, "rotation_range");
  for (const auto& r : scaling_range) {
    check_range(r, "scaling_range");
    if (r.low <= 0.0) throw Error(ErrorCode::ConfigError, "scaling_range must be positive");
  }
  check_range(shear_range, "shear_range");
  for (const auto& r : translation_range) check_range(r, "translation_range");
  check_lattice(elastic_grid, "elastic_grid");
  check_range(elastic_std_range, "elastic_std_range");
  if (elastic_std_range.low < 0.0) throw Error(ErrorCode::ConfigError, "elastic_std_range must be >= 0");
  check_range(blur_sigma_range, "blur_sigma_range");
  if (blur_sigma_range.low < 0.0) throw Error(ErrorCode::ConfigError, "blur_sigma_range must be >= 0");
  check_lattice(bias_grid, "bias_grid");
  check_range(bias_std_range, "bias_std_range");
  if (bias_std_range.low < 0.0) throw Error(ErrorCode::ConfigError, "bias_std_range must be >= 0");
  if (sulcus_labels.low > sulcus_labels.high) {
    throw Error(ErrorCode::ConfigError, "sulcus_label_range must have low <= high");
  }
  for (const auto& [from, to] : substitution_table) {
    if (!sulcus_labels.contains(from)) {
      throw Error(ErrorCode::ConfigError,
                  "substitution entry " + std::to_string(from) + " is outside the sulcus label range");
    }
    if (sulcus_labels.contains(to)) {
      throw Error(ErrorCode::ConfigError, "substitute for " + std::to_string(from) + " is itself a sulcus label");
    }
  }
}

Affine sample_affine(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  Vec3 angle{}, scale{}, shift{};
  for (int a = 0; a < 3; ++a) angle[a] = uniform(rng, config.rotation_range[a]) * std::numbers::pi / 180.0;
  for (int a = 0; a < 3; ++a) scale[a] = uniform(rng, config.scaling_range[a]);
  std::array<double, 6> shear{};
  for (auto& s : shear) s = uniform(rng, config.shear_range);
  for (int a = 0; a < 3; ++a) shift[a] = uniform(rng, config.translation_range[a]);

  Affine rx = identity_affine(), ry = identity_affine(), rz = identity_affine();
  const double cx = std::cos(angle[0]), sx = std::sin(angle[0]);
  const double cy = std::cos(angle[1]), sy = std::sin(angle[1]);
  const double cz = std::cos(angle[2]), sz = std::sin(angle[2]);
  rx[5] = cx, rx[6] = -sx, rx[9] = sx, rx[10] = cx;
  ry[0] = cy, ry[2] = sy, ry[8] = -sy, ry[10] = cy;
  rz[0] = cz, rz[1] = -sz, rz[4] = sz, rz[5] = cz;

  Affine sh = identity_affine();
  sh[1] = shear[0], sh[2] = shear[1], sh[4] = shear[2], sh[6] = shear[3], sh[8] = shear[4], sh[9] = shear[5];

  const Affine sc = diagonal_affine(scale);
  Affine tr = identity_affine();
  tr[3] = shift[0], tr[7] = shift[1], tr[11] = shift[2];

  return multiply(tr, multiply(rz, multiply(ry, multiply(rx, multiply(sh, sc)))));
}

std::vector<double> upsample_control_grid(const std::vector<double>& control,
                                          const std::array<int, 3>& cs, const Index3& target) {
  for (int a = 0; a < 3; ++a) {
    if (cs[a] < 2) throw Error(ErrorCode::InvalidArgument, "control lattice entries must be >= 2");
  }
  if (control.size() != static_cast<std::size_t>(cs[0]) * cs[1] * cs[2]) {
    throw Error(ErrorCode::InvalidArgument, "control values do not match control lattice shape");
  }
  const AxisWeights wx = axis_weights(cs[0], target[0]);
  const AxisWeights wy = axis_weights(cs[1], target[1]);
  const AxisWeights wz = axis_weights(cs[2], target[2]);
  auto at = [&](int x, int y, int z) {
    return control[static_cast<std::size_t>(x + cs[0] * (y + cs[1] * z))];
  };
  std::vector<double> out(static_cast<std::size_t>(target[0] * target[1] * target[2]));
  std::size_t idx = 0;
  for (std::int64_t z = 0; z < target[2]; ++z) {
    const int z0 = wz.lower[static_cast<std::size_t>(z)];
    const double fz = wz.frac[static_cast<std::size_t>(z)];
    for (std::int64_t y = 0; y < target[1]; ++y) {
      const int y0 = wy.lower[static_cast<std::size_t>(y)];
      const double fy = wy.frac[static_cast<std::size_t>(y)];
      for (std::int64_t x = 0; x < target[0]; ++x, ++idx) {
        const int x0 = wx.lower[static_cast<std::size_t>(x)];
        const double fx = wx.frac[static_cast<std::size_t>(x)];
        double acc = 0.0;
        for (int dz = 0; dz < 2; ++dz) {
          const double w_z = dz ? fz : 1.0 - fz;
          for (int dy = 0; dy < 2; ++dy) {
            const double w_y = dy ? fy : 1.0 - fy;
            for (int dx = 0; dx < 2; ++dx) {
              const double w_x = dx ? fx : 1.0 - fx;
              acc += w_x * w_y * w_z * at(x0 + dx, y0 + dy, z0 + dz);
            }
          }
        }
        out[idx] = acc;
      }
    }
  }
  return out;
}

DeformationField sample_elastic(const GeneratorConfig& config, const VoxelGrid& grid,
                                std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const double sigma = uniform(rng, config.elastic_std_range);
  DeformationField field{grid, std::vector<std::array<float, 3>>(grid.size())};
  for (int c = 0; c < 3; ++c) {
    const auto lattice = random_lattice(rng, config.elastic_grid, sigma);
    const auto dense = upsample_control_grid(lattice, config.elastic_grid, grid.shape);
    for (std::size_t i = 0; i < dense.size(); ++i) field.displacement[i][c] = static_cast<float>(dense[i]);
  }
  return field;
}

LabelVolume deform_labels(const LabelVolume& labels, const Affine& affine, const DeformationField& field) {
  if (field.grid.shape != labels.grid.shape || field.displacement.size() != labels.size()) {
    throw Error(ErrorCode::GridMismatch, "deformation field does not match label grid");
  }
  const auto& shape = labels.grid.shape;
  const Vec3 centre{(shape[0] - 1) / 2.0, (shape[1] - 1) / 2.0, (shape[2] - 1) / 2.0};
  LabelVolume out(labels.grid);
  std::size_t idx = 0;
  for (std::int64_t z = 0; z < shape[2]; ++z) {
    for (std::int64_t y = 0; y < shape[1]; ++y) {
      for (std::int64_t x = 0; x < shape[0]; ++x, ++idx) {
        const auto& u = field.displacement[idx];
        const Vec3 p{x + static_cast<double>(u[0]) - centre[0], y + static_cast<double>(u[1]) - centre[1],
                     z + static_cast<double>(u[2]) - centre[2]};
        Vec3 src = apply(affine, p);
        for (int a = 0; a < 3; ++a) src[a] += centre[a];
        out.voxels[idx] = sample_nearest(labels, src);
      }
    }
  }
  return out;
}

LabelVolume substitute_sulci(const LabelVolume& labels, const SubstitutionTable& table,
                             const LabelRange& sulcus_labels) {
  std::vector<std::uint16_t> lut(65536);
  for (std::size_t l = 0; l < lut.size(); ++l) lut[l] = static_cast<std::uint16_t>(l);
  for (const auto& [from, to] : table) lut[from] = to;
  for (auto l : labels_present(labels)) {
    if (sulcus_labels.contains(l) && !table.contains(l)) {
      throw Error(ErrorCode::MissingSubstitution, "no substitute tissue for sulcus label " + std::to_string(l));
    }
  }
  LabelVolume out(labels.grid);
  for (std::size_t i = 0; i < labels.size(); ++i) out.voxels[i] = lut[labels.voxels[i]];
  return out;
}

IntensityVolume sample_intensities(const LabelVolume& tissue_labels, const TissuePriors& priors,
                                   std::uint64_t seed) {
  priors.validate();
  for (auto l : labels_present(tissue_labels)) {
    if (l != 0 && !priors.entries.contains(l)) {
      throw Error(ErrorCode::MissingPrior, "no intensity prior for label " + std::to_string(l));
    }
  }
  Rng rng(seed);
  // One (mean, std) per label per generated image, drawn in label order.
  std::vector<double> mean(65536, 0.0), stddev(65536, 0.0);
  for (const auto& [label, p] : priors.entries) {
    mean[label] = uniform(rng, p.mean_range);
    stddev[label] = uniform(rng, p.std_range);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  IntensityVolume out(tissue_labels.grid, 0.0f);
  for (std::size_t i = 0; i < tissue_labels.size(); ++i) {
    const auto l = tissue_labels.voxels[i];
    if (l == 0) continue;
    out.voxels[i] = static_cast<float>(mean[l] + stddev[l] * normal(rng));
  }
  return out;
}

IntensityVolume gaussian_blur(const IntensityVolume& image, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::InvalidArgument, "sigma must be >= 0");
  if (sigma == 0.0) return image;

  const auto radius = static_cast<std::int64_t>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::int64_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;

  const auto& shape = image.grid.shape;
  std::vector<double> src(image.voxels.begin(), image.voxels.end());
  std::vector<double> dst(src.size());
  const std::int64_t stride[3] = {1, shape[0], shape[0] * shape[1]};

  for (int axis = 0; axis < 3; ++axis) {
    const std::int64_t n = shape[axis];
    for (std::size_t i = 0; i < src.size(); ++i) {
      const auto pos = image.grid.coords(i)[axis];
      const auto base = static_cast<std::int64_t>(i) - pos * stride[axis];
      double acc = 0.0;
      for (std::int64_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               src[static_cast<std::size_t>(base + reflect(pos + k, n) * stride[axis])];
      }
      dst[i] = acc;
    }
    std::swap(src, dst);
  }

  IntensityVolume out(image.grid);
  for (std::size_t i = 0; i < src.size(); ++i) out.voxels[i] = static_cast<float>(src[i]);
  return out;
}

IntensityVolume apply_bias_field(const IntensityVolume& image, const GeneratorConfig& config,
                                 std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const double sigma = uniform(rng, config.bias_std_range);
  const auto lattice = random_lattice(rng, config.bias_grid, sigma);
  const auto log_field = upsample_control_grid(lattice, config.bias_grid, image.grid.shape);
  IntensityVolume out(image.grid);
  for (std::size_t i = 0; i < image.size(); ++i) {
    out.voxels[i] = static_cast<float>(static_cast<double>(image.voxels[i]) * std::exp(log_field[i]));
  }
  return out;
}

IntensityVolume normalize_intensity(const IntensityVolume& image) {
  IntensityVolume out(image.grid, 0.0f);
  if (image.size() == 0) return out;
  const auto [lo_it, hi_it] = std::minmax_element(image.voxels.begin(), image.voxels.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return out;
  const double span = hi - lo;
  for (std::size_t i = 0; i < image.size(); ++i) {
    out.voxels[i] = static_cast<float>((static_cast<double>(image.voxels[i]) - lo) / span);
  }
  return out;
}

Sample generate_sample(const LabelVolume& labels, const TissuePriors& priors,
                       const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  priors.validate();
  for (auto l : labels_present(labels)) {
    if (l == 0) continue;
    if (config.sulcus_labels.contains(l)) {
      const auto it = config.substitution_table.find(l);
      if (it == config.substitution_table.end()) {
        throw Error(ErrorCode::MissingSubstitution, "no substitute tissue for sulcus label " + std::to_string(l));
      }
      if (it->second != 0 && !priors.entries.contains(it->second)) {
        throw Error(ErrorCode::MissingPrior, "no intensity prior for label " + std::to_string(it->second));
      }
    } else if (!priors.entries.contains(l)) {
      throw Error(ErrorCode::MissingPrior, "no intensity prior for label " + std::to_string(l));
    }
  }

  const Affine affine = sample_affine(config, mix(seed, kAffine));
  const DeformationField field = sample_elastic(config, labels.grid, mix(seed, kElastic));
  LabelVolume deformed = deform_labels(labels, affine, field);

  const LabelVolume tissue = substitute_sulci(deformed, config.substitution_table, config.sulcus_labels);
  IntensityVolume image = sample_intensities(tissue, priors, mix(seed, kIntensity));

  Rng blur_rng(mix(seed, kBlur));
  image = gaussian_blur(image, uniform(blur_rng, config.blur_sigma_range));
  image = apply_bias_field(image, config, mix(seed, kBias));
  if (config.normalize) image = normalize_intensity(image);

  return {std::move(image), std::move(deformed)};
}

std::vector<Sample> generate_views(const LabelVolume& labels, const TissuePriors& priors,
                                   const GeneratorConfig& config, std::uint64_t seed, std::size_t n,
                                   unsigned jobs) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "view count must be >= 1");
  std::vector<Sample> views(n);
  parallel_for(n, jobs, [&](std::size_t i) { views[i] = generate_sample(labels, priors, config, mix(seed, i)); });
  return views;
}

LabelVolume combine_label_maps(const LabelVolume& tissue, const LabelVolume& sulci) {
  require_same_grid(tissue.grid, sulci.grid, "combine_label_maps");
  LabelVolume out = tissue;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (sulci.voxels[i] != 0) out.voxels[i] = sulci.voxels[i];
  }
  return out;
}

}  // namespace sulcikit::synth
