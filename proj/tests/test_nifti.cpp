#include <doctest.h>

#include "scratch.hpp"

#include <sulcikit/nifti.hpp>

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>

using namespace sulcikit;
using sulcikit::testing::ScratchDir;

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<unsigned char> gunzip(const std::filesystem::path& p) {
  gzFile f = gzopen(p.string().c_str(), "rb");
  REQUIRE(f != nullptr);
  std::vector<unsigned char> out;
  unsigned char buf[4096];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
  gzclose(f);
  return out;
}

template <typename T>
T load(const std::vector<unsigned char>& b, std::size_t offset) {
  T v;
  std::memcpy(&v, b.data() + offset, sizeof v);
  return v;
}

// Minimal hand-built single-file header; fields not set stay zero.
class RawHeader {
 public:
  explicit RawHeader(bool big_endian) : big_(big_endian), bytes_(352, 0) {
    put<std::int32_t>(0, 348);
    put<float>(108, 352.0f);
    std::memcpy(bytes_.data() + 344, "n+1\0", 4);
  }
  template <typename T>
  void put(std::size_t offset, T value) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if (big_ != (std::endian::native == std::endian::big)) std::reverse(raw, raw + sizeof(T));
    std::memcpy(bytes_.data() + offset, raw, sizeof(T));
  }
  void shape(std::int16_t x, std::int16_t y, std::int16_t z) {
    put<std::int16_t>(40, 3);
    put<std::int16_t>(42, x);
    put<std::int16_t>(44, y);
    put<std::int16_t>(46, z);
  }
  void datatype(std::int16_t code, std::int16_t bits) {
    put<std::int16_t>(70, code);
    put<std::int16_t>(72, bits);
  }
  void pixdim(float q, float x, float y, float z) {
    put<float>(76, q);
    put<float>(80, x);
    put<float>(84, y);
    put<float>(88, z);
  }
  void magic(const char* m) { std::memcpy(bytes_.data() + 344, m, 4); }
  template <typename T>
  void append(T value) {
    const auto at = bytes_.size();
    bytes_.resize(at + sizeof(T));
    put<T>(at, value);
  }
  void save(const std::filesystem::path& p) const {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes_.data()), static_cast<std::streamsize>(bytes_.size()));
  }

 private:
  bool big_;
  std::vector<unsigned char> bytes_;
};

nifti::Image random_image(nifti::Datatype dt, const VoxelGrid& grid, std::uint64_t seed) {
  nifti::Image img{grid, dt, std::vector<double>(grid.size())};
  std::mt19937_64 rng(seed);
  for (auto& v : img.values) {
    switch (dt) {
      case nifti::Datatype::Uint8: v = static_cast<double>(rng() % 256); break;
      case nifti::Datatype::Int16: v = static_cast<double>(static_cast<std::int64_t>(rng() % 65536) - 32768); break;
      case nifti::Datatype::Int32: v = static_cast<double>(static_cast<std::int32_t>(rng())); break;
      case nifti::Datatype::Float32: v = static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(rng() % 0x7f000000u))); break;
      default: v = std::uniform_real_distribution<double>(-1e6, 1e6)(rng); break;
    }
  }
  return img;
}

}  // namespace

TEST_CASE("round trip is bit-identical for every supported datatype") {
  ScratchDir dir("nifti_rt");
  // Spacing diag(0.8, 1.2, 1.25) rotated 30 degrees about z, then translated.
  const double c = std::cos(std::numbers::pi / 6), s = std::sin(std::numbers::pi / 6);
  Affine a = identity_affine();
  a[0] = 0.8 * c, a[1] = -1.2 * s, a[4] = 0.8 * s, a[5] = 1.2 * c, a[10] = 1.25;
  a[3] = -90.5;
  a[7] = 12.0;
  a[11] = 3.25;
  const VoxelGrid grid({7, 5, 3}, {0.8, 1.2, 1.25}, a);
  std::uint64_t seed = 0;
  for (auto dt : {nifti::Datatype::Uint8, nifti::Datatype::Int16, nifti::Datatype::Int32, nifti::Datatype::Float32,
                  nifti::Datatype::Float64, nifti::Datatype::Int8, nifti::Datatype::Uint16, nifti::Datatype::Uint32}) {
    if (dt == nifti::Datatype::Int8 || dt == nifti::Datatype::Uint16 || dt == nifti::Datatype::Uint32) {
      nifti::Image img{grid, dt, std::vector<double>(grid.size())};
      for (std::size_t i = 0; i < img.values.size(); ++i) img.values[i] = static_cast<double>(i % 100);
      nifti::write(img, dir / "small.nii");
      CHECK(nifti::read(dir / "small.nii").values == img.values);
      continue;
    }
    for (const char* name : {"v.nii", "v.nii.gz"}) {
      const auto img = random_image(dt, grid, ++seed);
      nifti::write(img, dir / name);
      const auto back = nifti::read(dir / name);
      CHECK(back.datatype == dt);
      CHECK(back.values == img.values);
      CHECK(back.grid.shape == grid.shape);
      for (int i = 0; i < 12; ++i) CHECK(std::abs(back.grid.affine[i] - a[i]) <= 1e-6);
    }
  }
}

TEST_CASE("typed writers") {
  ScratchDir dir("nifti_typed");
  SUBCASE("zero volume re-reads with sum zero") {
    nifti::write(IntensityVolume(VoxelGrid({4, 4, 4}, {1, 1, 1})), dir / "z.nii");
    const auto back = nifti::read_intensity(dir / "z.nii");
    double sum = 0.0;
    for (float v : back.voxels) sum += v;
    CHECK(sum == 0.0);
    CHECK(nifti::read(dir / "z.nii").datatype == nifti::Datatype::Float32);
  }
  SUBCASE("spacing is written to pixdim and the header is 348 bytes") {
    nifti::write(IntensityVolume(VoxelGrid({4, 4, 4}, {1, 1, 1.25})), dir / "s.nii");
    const auto b = read_bytes(dir / "s.nii");
    CHECK(load<std::int32_t>(b, 0) == 348);
    CHECK(load<float>(b, 80) == 1.0f);
    CHECK(load<float>(b, 84) == 1.0f);
    CHECK(load<float>(b, 88) == 1.25f);
    CHECK(load<std::int16_t>(b, 254) == 2);
    CHECK(std::memcmp(b.data() + 344, "n+1", 4) == 0);
    const auto back = nifti::read_intensity(dir / "s.nii");
    CHECK(back.grid.spacing[2] == doctest::Approx(1.25));
  }
  SUBCASE("gzip iff the path ends in .gz") {
    nifti::write(LabelVolume(VoxelGrid({4, 4, 4}, {1, 1, 1})), dir / "l.nii.gz");
    nifti::write(LabelVolume(VoxelGrid({4, 4, 4}, {1, 1, 1})), dir / "l.nii");
    const auto gz = read_bytes(dir / "l.nii.gz");
    CHECK(gz[0] == 0x1f);
    CHECK(gz[1] == 0x8b);
    CHECK(load<std::int32_t>(read_bytes(dir / "l.nii"), 0) == 348);
    CHECK(load<std::int16_t>(gunzip(dir / "l.nii.gz"), 70) == 512);
  }
  SUBCASE("masks are written as uint8") {
    BinaryMask m(VoxelGrid({3, 3, 3}, {1, 1, 1}));
    m(1, 1, 1) = 1;
    nifti::write(m, dir / "m.nii");
    const auto img = nifti::read(dir / "m.nii");
    CHECK(img.datatype == nifti::Datatype::Uint8);
    CHECK(img.values[13] == 1.0);
  }
}

TEST_CASE("read errors") {
  ScratchDir dir("nifti_err");
  SUBCASE("two-file magic") {
    RawHeader h(false);
    h.shape(1, 1, 1);
    h.datatype(2, 8);
    h.magic("ni1\0");
    h.append<std::uint8_t>(0);
    h.save(dir / "two.nii");
    CHECK_THROWS_WITH_AS(nifti::read(dir / "two.nii"), doctest::Contains("CorruptHeader"), Error);
  }
  SUBCASE("NIfTI-2 header size") {
    RawHeader h(false);
    h.put<std::int32_t>(0, 540);
    h.save(dir / "n2.nii");
    CHECK_THROWS_WITH_AS(nifti::read(dir / "n2.nii"), doctest::Contains("CorruptHeader"), Error);
  }
  SUBCASE("unsupported datatype") {
    RawHeader h(false);
    h.shape(1, 1, 1);
    h.datatype(32, 64);  // complex64
    h.append<std::uint64_t>(0);
    h.save(dir / "c.nii");
    CHECK_THROWS_WITH_AS(nifti::read(dir / "c.nii"), doctest::Contains("UnsupportedDatatype"), Error);
  }
  SUBCASE("non-integer labels") {
    IntensityVolume v(VoxelGrid({2, 2, 2}, {1, 1, 1}));
    v(1, 0, 0) = 2.5f;
    nifti::write(v, dir / "f.nii");
    CHECK_THROWS_WITH_AS(nifti::read_labels(dir / "f.nii"), doctest::Contains("NonIntegerLabels"), Error);
    CHECK(nifti::read_intensity(dir / "f.nii")(1, 0, 0) == 2.5f);
  }
  SUBCASE("negative labels") {
    nifti::Image img{VoxelGrid({2, 1, 1}, {1, 1, 1}), nifti::Datatype::Int16, {0.0, -3.0}};
    nifti::write(img, dir / "neg.nii");
    CHECK_THROWS_AS(nifti::read_labels(dir / "neg.nii"), Error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(nifti::read(dir / "absent.nii"), doctest::Contains("IoError"), Error);
  }
  SUBCASE("truncated data") {
    RawHeader h(false);
    h.shape(4, 4, 4);
    h.datatype(2, 8);
    h.append<std::uint8_t>(1);
    h.save(dir / "short.nii");
    CHECK_THROWS_AS(nifti::read(dir / "short.nii"), Error);
  }
}

TEST_CASE("geometry resolution from hand-built headers") {
  ScratchDir dir("nifti_geom");
  SUBCASE("pixdim diagonal when neither form is set") {
    RawHeader h(false);
    h.shape(2, 1, 1);
    h.datatype(4, 16);
    h.pixdim(1, 2, 3, 4);
    h.append<std::int16_t>(-7);
    h.append<std::int16_t>(300);
    h.save(dir / "p.nii");
    const auto img = nifti::read(dir / "p.nii");
    CHECK(img.values == std::vector<double>{-7.0, 300.0});
    CHECK(img.grid.affine == diagonal_affine({2, 3, 4}));
  }
  SUBCASE("qform quaternion: 180 degrees about z") {
    RawHeader h(false);
    h.shape(1, 1, 1);
    h.datatype(16, 32);
    h.pixdim(1, 2, 3, 4);
    h.put<std::int16_t>(252, 1);
    h.put<float>(264, 1.0f);  // quatern_d
    h.put<float>(268, 10.0f);
    h.put<float>(272, 20.0f);
    h.put<float>(276, 30.0f);
    h.append<float>(1.5f);
    h.save(dir / "q.nii");
    const auto a = nifti::read(dir / "q.nii").grid.affine;
    const Affine expect{-2, 0, 0, 10, 0, -3, 0, 20, 0, 0, 4, 30, 0, 0, 0, 1};
    for (int i = 0; i < 16; ++i) CHECK(a[i] == doctest::Approx(expect[i]));
  }
  SUBCASE("qfac -1 flips the third axis") {
    RawHeader h(false);
    h.shape(1, 1, 1);
    h.datatype(16, 32);
    h.pixdim(-1, 1, 1, 2);
    h.put<std::int16_t>(252, 1);
    h.append<float>(0.0f);
    h.save(dir / "qf.nii");
    CHECK(nifti::read(dir / "qf.nii").grid.affine[10] == doctest::Approx(-2.0));
  }
  SUBCASE("sform wins over qform") {
    RawHeader h(false);
    h.shape(1, 1, 1);
    h.datatype(16, 32);
    h.pixdim(1, 2, 3, 4);
    h.put<std::int16_t>(252, 1);
    h.put<float>(264, 1.0f);
    h.put<std::int16_t>(254, 4);
    const float rows[12] = {0, 1.5f, 0, 5, 2.5f, 0, 0, 6, 0, 0, 3.5f, 7};
    for (int i = 0; i < 12; ++i) h.put<float>(280 + 4 * i, rows[i]);
    h.append<float>(0.0f);
    h.save(dir / "s.nii");
    const auto g = nifti::read(dir / "s.nii").grid;
    for (int i = 0; i < 12; ++i) CHECK(g.affine[i] == doctest::Approx(rows[i]));
    CHECK(g.spacing[0] == doctest::Approx(2.5));
    CHECK(g.spacing[1] == doctest::Approx(1.5));
    CHECK(g.spacing[2] == doctest::Approx(3.5));
  }
  SUBCASE("big-endian file with intensity scaling") {
    RawHeader h(true);
    h.shape(3, 1, 1);
    h.datatype(4, 16);
    h.pixdim(1, 1, 1, 1);
    h.put<float>(112, 0.5f);
    h.put<float>(116, 10.0f);
    h.append<std::int16_t>(0);
    h.append<std::int16_t>(2);
    h.append<std::int16_t>(-4);
    h.save(dir / "be.nii");
    CHECK(nifti::read(dir / "be.nii").values == std::vector<double>{10.0, 11.0, 8.0});
  }
}

TEST_CASE("file name helpers") {
  CHECK(nifti::stem("/a/b/sub01_seg.nii.gz") == "sub01_seg");
  CHECK(nifti::stem("x.nii") == "x");
  CHECK(nifti::is_gzip_path("x.nii.gz"));
  CHECK_FALSE(nifti::is_gzip_path("x.nii"));
}
