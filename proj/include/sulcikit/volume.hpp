#pragma once

#include <sulcikit/error.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

namespace sulcikit {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;
// Row-major 4x4 matrix.
using Affine = std::array<double, 16>;

Affine identity_affine();
Affine diagonal_affine(const Vec3& spacing);
Affine multiply(const Affine& a, const Affine& b);
Vec3 apply(const Affine& m, const Vec3& p);

/// Geometry of a 3D volume: shape in voxels, spacing in mm, and the
/// voxel-index to world-mm affine. Storage order is x-fastest.
struct VoxelGrid {
  Index3 shape{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Affine affine = identity_affine();

  VoxelGrid() = default;
  // Diagonal affine built from `spacing`.
  VoxelGrid(const Index3& shape, const Vec3& spacing);
  VoxelGrid(const Index3& shape, const Vec3& spacing, const Affine& affine);

  std::size_t size() const {
    return static_cast<std::size_t>(shape[0] * shape[1] * shape[2]);
  }
  std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + shape[0] * (y + shape[1] * z));
  }
  Index3 coords(std::size_t linear_index) const;
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < shape[0] && y < shape[1] && z < shape[2];
  }

  // Throws InvalidArgument when shape/spacing/affine are inconsistent.
  void validate() const;
};

// Shape must match exactly; spacing and affine within `tol` (absolute).
bool same_geometry(const VoxelGrid& a, const VoxelGrid& b, double tol = 1e-6);
void require_same_grid(const VoxelGrid& a, const VoxelGrid& b, const char* context);

/// Dense scalar field on a VoxelGrid.
template <typename T>
struct Volume {
  using value_type = T;

  VoxelGrid grid;
  std::vector<T> voxels;

  Volume() = default;
  explicit Volume(const VoxelGrid& g, T fill = T{}) : grid(g), voxels(g.size(), fill) {}
  Volume(const VoxelGrid& g, std::vector<T> data) : grid(g), voxels(std::move(data)) {
    if (voxels.size() != grid.size()) {
      throw Error(ErrorCode::InvalidArgument, "voxel buffer does not match grid shape");
    }
  }

  std::size_t size() const { return voxels.size(); }
  T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) { return voxels[grid.linear(x, y, z)]; }
  const T& operator()(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return voxels[grid.linear(x, y, z)];
  }
};

using IntensityVolume = Volume<float>;
using LabelVolume = Volume<std::uint16_t>;
// 0/1 bytes rather than vector<bool> so masks can be viewed as spans.
using BinaryMask = Volume<std::uint8_t>;
using ProbabilityVolume = Volume<double>;

using LabelSet = std::set<std::uint16_t>;

LabelSet labels_present(const LabelVolume& labels);
std::size_t count(const BinaryMask& mask);

BinaryMask binarize(const LabelVolume& labels, const LabelSet& label_set);
// Foreground = any nonzero label.
BinaryMask nonzero_mask(const LabelVolume& labels);

template <typename T>
struct Cropped {
  Volume<T> volume;
  Index3 offset{0, 0, 0};
};

/// Minimal bounding box of nonzero voxels grown by `margin` and clamped to
/// the source extent. The affine is shifted so world positions are unchanged.
template <typename T>
Cropped<T> crop_to_content(const Volume<T>& volume, std::int64_t margin = 0);

enum class Interpolation { Nearest, Trilinear };

/// Resamples onto `target_shape` covering the same physical extent (spacing is
/// rescaled). Samples outside the source extent read 0.
IntensityVolume resample(const IntensityVolume& volume, const Index3& target_shape,
                         Interpolation mode);
LabelVolume resample(const LabelVolume& volume, const Index3& target_shape,
                     Interpolation mode);

// Continuous-index samplers shared with the synthesis module.
double sample_trilinear(const IntensityVolume& volume, const Vec3& p);
template <typename T>
T sample_nearest(const Volume<T>& volume, const Vec3& p);

}  // namespace sulcikit
