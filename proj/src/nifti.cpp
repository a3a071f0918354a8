#include <sulcikit/nifti.hpp>

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>

namespace sulcikit::nifti {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kNifti2HeaderSize = 540;
constexpr int kVoxOffset = 352;

// Field offsets within the 348-byte NIfTI-1 header.
namespace off {
constexpr int sizeof_hdr = 0;
constexpr int dim = 40;
constexpr int datatype = 70;
constexpr int bitpix = 72;
constexpr int pixdim = 76;
constexpr int vox_offset = 108;
constexpr int scl_slope = 112;
constexpr int scl_inter = 116;
constexpr int xyzt_units = 123;
constexpr int descrip = 148;
constexpr int qform_code = 252;
constexpr int sform_code = 254;
constexpr int quatern_b = 256;
constexpr int qoffset_x = 268;
constexpr int srow_x = 280;
constexpr int magic = 344;
}  // namespace off

using HeaderBytes = std::array<unsigned char, kHeaderSize>;

void byteswap_inplace(unsigned char* p, int n) { std::reverse(p, p + n); }

template <typename T>
T get(const HeaderBytes& h, int offset, bool swap) {
  std::array<unsigned char, sizeof(T)> raw{};
  std::memcpy(raw.data(), h.data() + offset, sizeof(T));
  if (swap) byteswap_inplace(raw.data(), sizeof(T));
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

template <typename T>
void put(HeaderBytes& h, int offset, T v) {
  std::memcpy(h.data() + offset, &v, sizeof(T));
}

bool known_datatype(std::int16_t code) {
  switch (static_cast<Datatype>(code)) {
    case Datatype::Uint8:
    case Datatype::Int16:
    case Datatype::Int32:
    case Datatype::Float32:
    case Datatype::Float64:
    case Datatype::Int8:
    case Datatype::Uint16:
    case Datatype::Uint32:
      return true;
  }
  return false;
}

struct GzCloser {
  void operator()(gzFile f) const {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<std::remove_pointer_t<gzFile>, GzCloser>;

void read_exact(gzFile f, void* dst, std::size_t n, const std::filesystem::path& path) {
  auto* out = static_cast<unsigned char*>(dst);
  while (n > 0) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n, 1u << 30));
    const int got = gzread(f, out, chunk);
    if (got <= 0) throw Error(ErrorCode::IoError, "truncated NIfTI file: " + path.string());
    out += got;
    n -= static_cast<std::size_t>(got);
  }
}

Affine quaternion_affine(const HeaderBytes& h, bool swap, const Vec3& pixdim, float qfac_raw) {
  const double b = get<float>(h, off::quatern_b, swap);
  const double c = get<float>(h, off::quatern_b + 4, swap);
  const double d = get<float>(h, off::quatern_b + 8, swap);
  const double a = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
  const double qfac = qfac_raw < 0 ? -1.0 : 1.0;
  const double r[3][3] = {
      {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
      {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
      {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b},
  };
  const Vec3 scale{pixdim[0], pixdim[1], pixdim[2] * qfac};
  Affine m = identity_affine();
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) m[row * 4 + col] = r[row][col] * scale[col];
    m[row * 4 + 3] = get<float>(h, off::qoffset_x + 4 * row, swap);
  }
  return m;
}

VoxelGrid grid_from_affine(const Index3& shape, const Affine& affine) {
  Vec3 spacing{};
  for (int a = 0; a < 3; ++a) {
    spacing[a] = std::sqrt(affine[a] * affine[a] + affine[4 + a] * affine[4 + a] +
                           affine[8 + a] * affine[8 + a]);
    if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
      throw Error(ErrorCode::CorruptHeader, "degenerate orientation matrix");
    }
  }
  return VoxelGrid(shape, spacing, affine);
}

template <typename T>
double load_as(const unsigned char* p, bool swap) {
  std::array<unsigned char, sizeof(T)> raw{};
  std::memcpy(raw.data(), p, sizeof(T));
  if (swap) byteswap_inplace(raw.data(), sizeof(T));
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return static_cast<double>(v);
}

double decode(Datatype dt, const unsigned char* p, bool swap) {
  switch (dt) {
    case Datatype::Uint8: return load_as<std::uint8_t>(p, false);
    case Datatype::Int8: return load_as<std::int8_t>(p, false);
    case Datatype::Int16: return load_as<std::int16_t>(p, swap);
    case Datatype::Uint16: return load_as<std::uint16_t>(p, swap);
    case Datatype::Int32: return load_as<std::int32_t>(p, swap);
    case Datatype::Uint32: return load_as<std::uint32_t>(p, swap);
    case Datatype::Float32: return load_as<float>(p, swap);
    case Datatype::Float64: return load_as<double>(p, swap);
  }
  return 0.0;
}

template <typename T>
void store_integer(double v, unsigned char* p) {
  if (v != std::floor(v) || v < static_cast<double>(std::numeric_limits<T>::min()) ||
      v > static_cast<double>(std::numeric_limits<T>::max())) {
    throw Error(ErrorCode::InvalidArgument, "value not representable in the requested integer datatype");
  }
  const T t = static_cast<T>(v);
  std::memcpy(p, &t, sizeof(T));
}

void encode(Datatype dt, double v, unsigned char* p) {
  switch (dt) {
    case Datatype::Uint8: store_integer<std::uint8_t>(v, p); break;
    case Datatype::Int8: store_integer<std::int8_t>(v, p); break;
    case Datatype::Int16: store_integer<std::int16_t>(v, p); break;
    case Datatype::Uint16: store_integer<std::uint16_t>(v, p); break;
    case Datatype::Int32: store_integer<std::int32_t>(v, p); break;
    case Datatype::Uint32: store_integer<std::uint32_t>(v, p); break;
    case Datatype::Float32: {
      const auto f = static_cast<float>(v);
      std::memcpy(p, &f, 4);
      break;
    }
    case Datatype::Float64: std::memcpy(p, &v, 8); break;
  }
}

}  // namespace

int bytes_per_voxel(Datatype dt) {
  switch (dt) {
    case Datatype::Uint8:
    case Datatype::Int8: return 1;
    case Datatype::Int16:
    case Datatype::Uint16: return 2;
    case Datatype::Int32:
    case Datatype::Uint32:
    case Datatype::Float32: return 4;
    case Datatype::Float64: return 8;
  }
  return 0;
}

bool is_integer(Datatype dt) { return dt != Datatype::Float32 && dt != Datatype::Float64; }

bool is_gzip_path(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::string stem(const std::filesystem::path& path) {
  std::string name = path.filename().string();
  for (const char* ext : {".nii.gz", ".nii"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0) {
      return name.substr(0, name.size() - e.size());
    }
  }
  return path.stem().string();
}

Image read(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::IoError, "no such file: " + path.string());
  GzHandle file(gzopen(path.string().c_str(), "rb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path.string());

  HeaderBytes h{};
  read_exact(file.get(), h.data(), h.size(), path);

  bool swap = false;
  const auto hdr_size = get<std::int32_t>(h, off::sizeof_hdr, false);
  if (hdr_size != kHeaderSize) {
    const auto swapped = get<std::int32_t>(h, off::sizeof_hdr, true);
    if (swapped == kHeaderSize) {
      swap = true;
    } else if (hdr_size == kNifti2HeaderSize || swapped == kNifti2HeaderSize) {
      throw Error(ErrorCode::CorruptHeader, "NIfTI-2 files are not supported: " + path.string());
    } else {
      throw Error(ErrorCode::CorruptHeader, "bad sizeof_hdr in " + path.string());
    }
  }
  if (std::memcmp(h.data() + off::magic, "n+1\0", 4) != 0) {
    throw Error(ErrorCode::CorruptHeader,
                "magic is not \"n+1\" (only single-file NIfTI-1 is supported): " + path.string());
  }

  const auto ndim = get<std::int16_t>(h, off::dim, swap);
  if (ndim < 1 || ndim > 7) throw Error(ErrorCode::CorruptHeader, "dim[0] out of range");
  Index3 shape{1, 1, 1};
  for (int a = 0; a < ndim; ++a) {
    const auto n = get<std::int16_t>(h, off::dim + 2 * (a + 1), swap);
    if (n < 1) throw Error(ErrorCode::CorruptHeader, "non-positive dimension");
    if (a < 3) {
      shape[a] = n;
    } else if (n != 1) {
      throw Error(ErrorCode::CorruptHeader, "only 3D volumes are supported");
    }
  }

  const auto dt_code = get<std::int16_t>(h, off::datatype, swap);
  if (!known_datatype(dt_code)) {
    throw Error(ErrorCode::UnsupportedDatatype, "datatype code " + std::to_string(dt_code));
  }
  const auto dt = static_cast<Datatype>(dt_code);

  Vec3 pixdim{};
  for (int a = 0; a < 3; ++a) {
    const double p = std::abs(get<float>(h, off::pixdim + 4 * (a + 1), swap));
    pixdim[a] = (p > 0.0 && std::isfinite(p)) ? p : 1.0;
  }
  const float qfac = get<float>(h, off::pixdim, swap);

  Affine affine;
  if (get<std::int16_t>(h, off::sform_code, swap) > 0) {
    affine = identity_affine();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 4; ++col) {
        affine[row * 4 + col] = get<float>(h, off::srow_x + 16 * row + 4 * col, swap);
      }
    }
  } else if (get<std::int16_t>(h, off::qform_code, swap) > 0) {
    affine = quaternion_affine(h, swap, pixdim, qfac);
  } else {
    affine = diagonal_affine(pixdim);
  }

  Image image;
  image.grid = grid_from_affine(shape, affine);
  image.datatype = dt;

  const auto vox_offset = static_cast<long>(get<float>(h, off::vox_offset, swap));
  if (vox_offset < kHeaderSize) throw Error(ErrorCode::CorruptHeader, "vox_offset inside header");
  std::vector<unsigned char> skip(static_cast<std::size_t>(vox_offset - kHeaderSize));
  if (!skip.empty()) read_exact(file.get(), skip.data(), skip.size(), path);

  const std::size_t n = image.grid.size();
  const int bpv = bytes_per_voxel(dt);
  std::vector<unsigned char> raw(n * static_cast<std::size_t>(bpv));
  read_exact(file.get(), raw.data(), raw.size(), path);

  const double slope = get<float>(h, off::scl_slope, swap);
  const double inter = get<float>(h, off::scl_inter, swap);
  const bool scaled = slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0);

  image.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = decode(dt, raw.data() + i * static_cast<std::size_t>(bpv), swap);
    image.values[i] = scaled ? v * slope + inter : v;
  }
  if (scaled && is_integer(dt)) image.datatype = Datatype::Float64;
  return image;
}

void write(const Image& image, const std::filesystem::path& path) {
  const auto& g = image.grid;
  if (image.values.size() != g.size()) {
    throw Error(ErrorCode::InvalidArgument, "voxel buffer does not match grid shape");
  }
  for (int a = 0; a < 3; ++a) {
    if (g.shape[a] > std::numeric_limits<std::int16_t>::max()) {
      throw Error(ErrorCode::InvalidArgument, "dimension too large for NIfTI-1");
    }
  }
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw Error(ErrorCode::IoError, "parent directory does not exist: " + parent.string());
  }

  HeaderBytes h{};
  put<std::int32_t>(h, off::sizeof_hdr, kHeaderSize);
  put<std::int16_t>(h, off::dim, 3);
  for (int a = 0; a < 7; ++a) {
    put<std::int16_t>(h, off::dim + 2 * (a + 1), a < 3 ? static_cast<std::int16_t>(g.shape[a]) : 1);
  }
  put<std::int16_t>(h, off::datatype, static_cast<std::int16_t>(image.datatype));
  put<std::int16_t>(h, off::bitpix, static_cast<std::int16_t>(8 * bytes_per_voxel(image.datatype)));
  put<float>(h, off::pixdim, 1.0f);
  for (int a = 0; a < 3; ++a) put<float>(h, off::pixdim + 4 * (a + 1), static_cast<float>(g.spacing[a]));
  put<float>(h, off::vox_offset, static_cast<float>(kVoxOffset));
  put<float>(h, off::scl_slope, 1.0f);
  put<float>(h, off::scl_inter, 0.0f);
  h[off::xyzt_units] = 2;  // mm
  const char descrip[] = "sulcikit";
  std::memcpy(h.data() + off::descrip, descrip, sizeof(descrip));
  put<std::int16_t>(h, off::qform_code, 0);
  put<std::int16_t>(h, off::sform_code, 2);
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 4; ++col) {
      put<float>(h, off::srow_x + 16 * row + 4 * col, static_cast<float>(g.affine[row * 4 + col]));
    }
  }
  std::memcpy(h.data() + off::magic, "n+1\0", 4);

  const int bpv = bytes_per_voxel(image.datatype);
  std::vector<unsigned char> buffer(static_cast<std::size_t>(kVoxOffset) +
                                    image.values.size() * static_cast<std::size_t>(bpv));
  std::memcpy(buffer.data(), h.data(), h.size());
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    encode(image.datatype, image.values[i], buffer.data() + kVoxOffset + i * static_cast<std::size_t>(bpv));
  }

  if (is_gzip_path(path)) {
    GzHandle file(gzopen(path.string().c_str(), "wb6"));
    if (!file) throw Error(ErrorCode::IoError, "cannot open for writing: " + path.string());
    std::size_t done = 0;
    while (done < buffer.size()) {
      const auto chunk = static_cast<unsigned>(std::min<std::size_t>(buffer.size() - done, 1u << 30));
      if (gzwrite(file.get(), buffer.data() + done, chunk) != static_cast<int>(chunk)) {
        throw Error(ErrorCode::IoError, "write failed: " + path.string());
      }
      done += chunk;
    }
    if (gzclose(file.release()) != Z_OK) throw Error(ErrorCode::IoError, "write failed: " + path.string());
  } else {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
  }
}

IntensityVolume read_intensity(const std::filesystem::path& path) {
  const Image image = read(path);
  IntensityVolume out(image.grid);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    const auto v = static_cast<float>(image.values[i]);
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite intensity in " + path.string());
    out.voxels[i] = v;
  }
  return out;
}

LabelVolume read_labels(const std::filesystem::path& path) {
  const Image image = read(path);
  LabelVolume out(image.grid);
  for (std::size_t i = 0; i < image.values.size(); ++i) {
    const double v = image.values[i];
    if (!(v >= 0.0 && v <= 65535.0) || v != std::floor(v)) {
      throw Error(ErrorCode::NonIntegerLabels,
                  "value " + std::to_string(v) + " is not a valid label in " + path.string());
    }
    out.voxels[i] = static_cast<std::uint16_t>(v);
  }
  return out;
}

void write(const IntensityVolume& volume, const std::filesystem::path& path, Datatype datatype) {
  Image image{volume.grid, datatype, {volume.voxels.begin(), volume.voxels.end()}};
  write(image, path);
}

void write(const LabelVolume& volume, const std::filesystem::path& path, Datatype datatype) {
  if (!is_integer(datatype)) {
    throw Error(ErrorCode::UnsupportedDatatype, "labels must be written with an integer datatype");
  }
  Image image{volume.grid, datatype, {volume.voxels.begin(), volume.voxels.end()}};
  write(image, path);
}

void write(const BinaryMask& mask, const std::filesystem::path& path) {
  Image image{mask.grid, Datatype::Uint8, {mask.voxels.begin(), mask.voxels.end()}};
  write(image, path);
}

}  // namespace sulcikit::nifti
