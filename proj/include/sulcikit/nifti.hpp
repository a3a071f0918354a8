#pragma once

#include <sulcikit/volume.hpp>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sulcikit::nifti {

// On-disk element types (NIfTI-1 datatype codes).
enum class Datatype : std::int16_t {
  Uint8 = 2,
  Int16 = 4,
  Int32 = 8,
  Float32 = 16,
  Float64 = 64,
  Int8 = 256,
  Uint16 = 512,
  Uint32 = 768,
};

int bytes_per_voxel(Datatype dt);
bool is_integer(Datatype dt);

/// Decoded single-file NIfTI-1 image. Values are held as doubles, which is
/// lossless for every supported on-disk type; `datatype` records the original.
struct Image {
  VoxelGrid grid;
  Datatype datatype = Datatype::Float32;
  std::vector<double> values;
};

Image read(const std::filesystem::path& path);
void write(const Image& image, const std::filesystem::path& path);

IntensityVolume read_intensity(const std::filesystem::path& path);
// Throws NonIntegerLabels if any value is fractional or outside [0, 65535].
LabelVolume read_labels(const std::filesystem::path& path);

// Intensities default to float32 and labels to uint16 on disk. Any integer
// datatype can be requested for labels provided the values fit.
void write(const IntensityVolume& volume, const std::filesystem::path& path,
           Datatype datatype = Datatype::Float32);
void write(const LabelVolume& volume, const std::filesystem::path& path,
           Datatype datatype = Datatype::Uint16);
void write(const BinaryMask& mask, const std::filesystem::path& path);

bool is_gzip_path(const std::filesystem::path& path);
// File name without the .nii / .nii.gz extension.
std::string stem(const std::filesystem::path& path);

}  // namespace sulcikit::nifti
