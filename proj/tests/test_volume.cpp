#include <doctest.h>

#include <sulcikit/checks.hpp>
#include <sulcikit/volume.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace sulcikit;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected sulcikit::Error");
  return ErrorCode::InvalidArgument;
}

LabelVolume random_labels(const Index3& shape, const std::vector<std::uint16_t>& alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  LabelVolume v(VoxelGrid(shape, {1, 1, 1}));
  for (auto& x : v.voxels) x = alphabet[pick(rng)];
  return v;
}

}  // namespace

TEST_CASE("voxel grid indexing is x-fastest") {
  VoxelGrid g({3, 4, 5}, {1, 1, 1});
  CHECK(g.size() == 60);
  CHECK(g.linear(1, 0, 0) == 1);
  CHECK(g.linear(0, 1, 0) == 3);
  CHECK(g.linear(0, 0, 1) == 12);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    CHECK(g.linear(c[0], c[1], c[2]) == i);
  }
}

TEST_CASE("grid validation rejects bad shapes and spacings") {
  CHECK(code_of([] { VoxelGrid({0, 1, 1}, {1, 1, 1}).validate(); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { VoxelGrid({1, 1, 1}, {1, -1, 1}).validate(); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("binarize") {
  const auto labels = random_labels({7, 6, 5}, {0, 1, 2}, 3);

  SUBCASE("empty set gives an all-false mask") {
    CHECK(count(binarize(labels, {})) == 0);
  }
  SUBCASE("every present label gives an all-true mask") {
    CHECK(count(binarize(labels, labels_present(labels))) == labels.size());
  }
  SUBCASE("count of a single label matches a direct scan") {
    const auto direct = static_cast<std::size_t>(std::count(labels.voxels.begin(), labels.voxels.end(), 1));
    CHECK(direct > 0);
    CHECK(count(binarize(labels, {1})) == direct);
    CHECK(binarize(labels, {1}).grid.shape == labels.grid.shape);
  }
}

TEST_CASE("crop_to_content") {
  SUBCASE("single voxel, no margin") {
    IntensityVolume v(VoxelGrid({10, 10, 10}, {1, 1, 1}));
    v(5, 5, 5) = 3.0f;
    const auto c = crop_to_content(v, 0);
    CHECK(c.volume.grid.shape == Index3{1, 1, 1});
    CHECK(c.offset == Index3{5, 5, 5});
    CHECK(c.volume(0, 0, 0) == 3.0f);
  }
  SUBCASE("all-zero volume") {
    IntensityVolume v(VoxelGrid({4, 4, 4}, {1, 1, 1}));
    CHECK(code_of([&] { crop_to_content(v, 0); }) == ErrorCode::EmptyVolume);
  }
  SUBCASE("random masks match a brute-force bounding-box scan") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto m = checks::random_mask({16, 16, 16}, 0.002 + 0.003 * static_cast<double>(seed % 4), seed);
      if (count(m) == 0) continue;
      Index3 lo{99, 99, 99}, hi{-1, -1, -1};
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m.voxels[i]) continue;
        const auto c = m.grid.coords(i);
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], c[a]);
          hi[a] = std::max(hi[a], c[a]);
        }
      }
      const auto c = crop_to_content(m, 2);
      for (int a = 0; a < 3; ++a) {
        const auto expect_lo = std::max<std::int64_t>(0, lo[a] - 2);
        const auto expect_hi = std::min<std::int64_t>(15, hi[a] + 2);
        CHECK(c.offset[a] == expect_lo);
        CHECK(c.volume.grid.shape[a] == expect_hi - expect_lo + 1);
      }
      CHECK(count(c.volume) == count(m));
    }
  }
  SUBCASE("nonzero multiset and world position are preserved") {
    const auto labels = random_labels({12, 9, 7}, {0, 0, 0, 0, 0, 0, 4, 9}, 8);
    LabelVolume framed(VoxelGrid({20, 20, 20}, {0.5, 1, 2}));
    for (std::int64_t z = 0; z < 7; ++z)
      for (std::int64_t y = 0; y < 9; ++y)
        for (std::int64_t x = 0; x < 12; ++x) framed(x + 4, y + 6, z + 3) = labels(x, y, z);
    const auto c = crop_to_content(framed, 1);
    std::map<std::uint16_t, std::size_t> before, after;
    for (auto v : framed.voxels) if (v) ++before[v];
    for (auto v : c.volume.voxels) if (v) ++after[v];
    CHECK(before == after);
    const Vec3 w0 = apply(c.volume.grid.affine, {0, 0, 0});
    const Vec3 w1 = apply(framed.grid.affine, {double(c.offset[0]), double(c.offset[1]), double(c.offset[2])});
    for (int a = 0; a < 3; ++a) CHECK(w0[a] == doctest::Approx(w1[a]));
  }
}

TEST_CASE("resample") {
  SUBCASE("same shape is the identity under both modes") {
    const auto labels = random_labels({6, 5, 4}, {0, 3, 7}, 1);
    CHECK(resample(labels, labels.grid.shape, Interpolation::Nearest).voxels == labels.voxels);
    IntensityVolume img(labels.grid);
    std::mt19937_64 rng(2);
    std::normal_distribution<float> n;
    for (auto& v : img.voxels) v = n(rng);
    CHECK(resample(img, img.grid.shape, Interpolation::Nearest).voxels == img.voxels);
    CHECK(resample(img, img.grid.shape, Interpolation::Trilinear).voxels == img.voxels);
  }
  SUBCASE("nearest never invents labels") {
    const auto labels = random_labels({9, 8, 7}, {0, 3, 7}, 4);
    for (const Index3& shape : {Index3{4, 4, 4}, Index3{17, 13, 21}, Index3{9, 3, 30}}) {
      for (auto l : labels_present(resample(labels, shape, Interpolation::Nearest))) {
        CHECK((l == 0 || l == 3 || l == 7));
      }
    }
  }
  SUBCASE("trilinear on labels is rejected") {
    const auto labels = random_labels({4, 4, 4}, {0, 1}, 5);
    CHECK(code_of([&] { resample(labels, {8, 8, 8}, Interpolation::Trilinear); }) == ErrorCode::ModeMismatch);
  }
  SUBCASE("2x upsampling of a linear ramp matches the interpolation formula") {
    // v(x) = 3x + 1 along x. Target voxel i maps to p = (i + 0.5) / 2 - 0.5; linear interpolation of a
    // ramp reproduces the ramp at p clamped to the sample range.
    const Index3 src{6, 3, 2};
    IntensityVolume ramp(VoxelGrid(src, {2, 1, 1}));
    for (std::int64_t z = 0; z < src[2]; ++z)
      for (std::int64_t y = 0; y < src[1]; ++y)
        for (std::int64_t x = 0; x < src[0]; ++x) ramp(x, y, z) = static_cast<float>(3 * x + 1);
    const auto up = resample(ramp, {12, 3, 2}, Interpolation::Trilinear);
    CHECK(up.grid.spacing[0] == 1.0);
    for (std::int64_t z = 0; z < 2; ++z)
      for (std::int64_t y = 0; y < 3; ++y)
        for (std::int64_t x = 0; x < 12; ++x) {
          const double p = std::clamp((static_cast<double>(x) + 0.5) / 2.0 - 0.5, 0.0, 5.0);
          CHECK(up(x, y, z) == doctest::Approx(3.0 * p + 1.0).epsilon(1e-6));
        }
  }
  SUBCASE("trilinear matches a direct corner-weight evaluation in 3D") {
    IntensityVolume v(VoxelGrid({5, 4, 3}, {1, 1, 1}));
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<float> u(-1, 1);
    for (auto& x : v.voxels) x = u(rng);
    const Index3 target{9, 7, 5};
    const auto out = resample(v, target, Interpolation::Trilinear);
    for (std::int64_t z = 0; z < target[2]; ++z)
      for (std::int64_t y = 0; y < target[1]; ++y)
        for (std::int64_t x = 0; x < target[0]; ++x) {
          double p[3] = {(x + 0.5) * 5.0 / 9.0 - 0.5, (y + 0.5) * 4.0 / 7.0 - 0.5, (z + 0.5) * 3.0 / 5.0 - 0.5};
          const double n[3] = {5, 4, 3};
          double expect = 0.0;
          for (int c = 0; c < 8; ++c) {
            double w = 1.0;
            std::int64_t idx[3];
            for (int a = 0; a < 3; ++a) {
              const double q = std::clamp(p[a], 0.0, n[a] - 1.0);
              const double lo = std::min(std::floor(q), n[a] - 2.0);
              const double t = q - lo;
              const int bit = (c >> a) & 1;
              w *= bit ? t : 1.0 - t;
              idx[a] = static_cast<std::int64_t>(lo) + bit;
            }
            expect += w * v(idx[0], idx[1], idx[2]);
          }
          CHECK(out(x, y, z) == doctest::Approx(expect).epsilon(1e-6));
        }
  }
  SUBCASE("physical extent is preserved") {
    IntensityVolume v(VoxelGrid({10, 8, 6}, {1.0, 1.5, 2.0}));
    const auto out = resample(v, {5, 16, 4}, Interpolation::Trilinear);
    for (int a = 0; a < 3; ++a) {
      CHECK(out.grid.spacing[a] * out.grid.shape[a] == doctest::Approx(v.grid.spacing[a] * v.grid.shape[a]));
    }
  }
  SUBCASE("samples outside the extent read zero") {
    IntensityVolume v(VoxelGrid({4, 4, 4}, {1, 1, 1}), 5.0f);
    CHECK(sample_trilinear(v, {-0.6, 1, 1}) == 0.0);
    CHECK(sample_trilinear(v, {3.6, 1, 1}) == 0.0);
    CHECK(sample_trilinear(v, {3.4, 1, 1}) == doctest::Approx(5.0));
    CHECK(sample_nearest(v, {1, 1, -2.0}) == 0.0f);
  }
}
