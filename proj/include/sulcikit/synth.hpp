#pragma once

#include <sulcikit/volume.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

namespace sulcikit::synth {

struct Range {
  double low = 0.0;
  double high = 0.0;

  bool valid() const { return low <= high; }
  static Range fixed(double v) { return {v, v}; }
};

using Rng = std::mt19937_64;

// Derives an independent stream seed from (seed, index). Used for per-stage,
// per-view and per-subject seeds so results never depend on evaluation order.
std::uint64_t mix(std::uint64_t seed, std::uint64_t index);

// Uniform draw on [low, high]; returns exactly `low` for a degenerate range.
double uniform(Rng& rng, const Range& range);

struct TissuePrior {
  Range mean_range;
  Range std_range;
};

/// Per-label Gaussian intensity hyper-ranges. Keys are label ids.
struct TissuePriors {
  std::map<std::uint16_t, TissuePrior> entries;

  void validate() const;
};

// Default T1w-like priors on a 0-255 scale for the bundled label convention
// (1 = CSF, 2 = GM, 3 = WM). Placeholders, not calibrated tissue statistics.
TissuePriors default_t1w_priors();

struct LabelRange {
  std::uint16_t low = 40;
  std::uint16_t high = 99;

  bool contains(std::uint16_t l) const { return l >= low && l <= high; }
};

using SubstitutionTable = std::map<std::uint16_t, std::uint16_t>;

/// All randomization hyper-parameters of the generator. Angles in degrees,
/// translations, elastic magnitudes and blur widths in voxels, bias in
/// log-intensity units.
struct GeneratorConfig {
  std::array<Range, 3> rotation_range{{{-15, 15}, {-15, 15}, {-15, 15}}};
  std::array<Range, 3> scaling_range{{{0.85, 1.15}, {0.85, 1.15}, {0.85, 1.15}}};
  Range shear_range{-0.012, 0.012};
  std::array<Range, 3> translation_range{{{-10, 10}, {-10, 10}, {-10, 10}}};
  std::array<int, 3> elastic_grid{10, 10, 10};
  Range elastic_std_range{0.0, 3.0};
  Range blur_sigma_range{0.5, 1.5};
  std::array<int, 3> bias_grid{4, 4, 4};
  Range bias_std_range{0.0, 0.5};
  // Labels in this range are sulci: they are kept in the emitted segmentation
  // but painted with the intensity of their substitute tissue.
  LabelRange sulcus_labels{};
  SubstitutionTable substitution_table{{48, 2}, {49, 2}};
  bool normalize = true;

  // Every random stage disabled: identity transform, no blur, no bias.
  static GeneratorConfig deterministic();

  void validate() const;
};

struct DeformationField {
  VoxelGrid grid;
  // Displacement in voxels per voxel, x-fastest order.
  std::vector<std::array<float, 3>> displacement;
};

/// translation * Rz * Ry * Rx * shear * scale, each parameter drawn
/// uniformly from its range. Acts on voxel coordinates about the grid centre
/// when used by deform_labels.
Affine sample_affine(const GeneratorConfig& config, std::uint64_t seed);

// Trilinear upsampling of a control lattice whose corner points coincide with
// the corner voxel centres of `target`. `control` is x-fastest.
std::vector<double> upsample_control_grid(const std::vector<double>& control,
                                          const std::array<int, 3>& control_shape,
                                          const Index3& target_shape);

DeformationField sample_elastic(const GeneratorConfig& config, const VoxelGrid& grid,
                                std::uint64_t seed);

/// Backward warp with nearest-neighbour lookup: output voxel x reads the
/// source label at c + M (x + u(x) - c), where c is the grid centre.
LabelVolume deform_labels(const LabelVolume& labels, const Affine& affine,
                          const DeformationField& field);

LabelVolume substitute_sulci(const LabelVolume& labels, const SubstitutionTable& table,
                             const LabelRange& sulcus_labels);

IntensityVolume sample_intensities(const LabelVolume& tissue_labels, const TissuePriors& priors,
                                   std::uint64_t seed);

IntensityVolume gaussian_blur(const IntensityVolume& image, double sigma);

IntensityVolume apply_bias_field(const IntensityVolume& image, const GeneratorConfig& config,
                                 std::uint64_t seed);

IntensityVolume normalize_intensity(const IntensityVolume& image);

struct Sample {
  IntensityVolume image;
  LabelVolume labels;
};

Sample generate_sample(const LabelVolume& labels, const TissuePriors& priors,
                       const GeneratorConfig& config, std::uint64_t seed);

// View i is generate_sample(..., mix(seed, i)).
std::vector<Sample> generate_views(const LabelVolume& labels, const TissuePriors& priors,
                                   const GeneratorConfig& config, std::uint64_t seed,
                                   std::size_t n, unsigned jobs = 1);

// Overlays nonzero labels of `sulci` onto `tissue`.
LabelVolume combine_label_maps(const LabelVolume& tissue, const LabelVolume& sulci);

}  // namespace sulcikit::synth
