#pragma once

#include <sulcikit/volume.hpp>

#include <cstdint>
#include <vector>

namespace sulcikit::postproc {

enum class Connectivity { Six = 6, Eighteen = 18, TwentySix = 26 };

Connectivity connectivity_from_int(int value);

// Offsets of the 3x3x3 neighbourhood (centre excluded) for a connectivity.
std::vector<Index3> neighbourhood(Connectivity connectivity);

struct PostprocConfig {
  int dilation_radius = 1;
  Connectivity connectivity = Connectivity::TwentySix;
  std::size_t keep = 2;

  void validate() const;
};

/// Component ids are 1..C, ordered by decreasing size; ties go to the
/// component holding the smaller linear voxel index. 0 is background.
struct ComponentLabeling {
  VoxelGrid grid;
  std::vector<std::uint32_t> ids;
  // sizes[c - 1] is the voxel count of component c.
  std::vector<std::size_t> sizes;

  std::size_t count() const { return sizes.size(); }
};

// `radius` iterations of the connectivity's 3x3x3 structuring element.
BinaryMask dilate(const BinaryMask& mask, int radius, Connectivity connectivity);

ComponentLabeling connected_components(const BinaryMask& mask, Connectivity connectivity);

/// Keeps voxels of `original` lying in the `keep` largest components of its
/// dilation. Keeps everything when there are fewer components.
BinaryMask keep_largest_components(const BinaryMask& original, const PostprocConfig& config);

// Default chain before meshing: radius 1, 26-connectivity, keep 2.
BinaryMask postprocess_cs(const BinaryMask& pred, const PostprocConfig& config = {});

}  // namespace sulcikit::postproc
