#include <doctest.h>

#include <sulcikit/checks.hpp>
#include <sulcikit/oracles.hpp>
#include <sulcikit/postproc.hpp>

#include <algorithm>
#include <cstdlib>
#include <numeric>

using namespace sulcikit;
using namespace sulcikit::postproc;

namespace {

BinaryMask empty(const Index3& shape) { return BinaryMask(VoxelGrid(shape, {1, 1, 1})); }

bool subset(const BinaryMask& a, const BinaryMask& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.voxels[i] && !b.voxels[i]) return false;
  return true;
}

// Direct enumeration: a voxel is on when some seed lies within the given
// connectivity's offset set after `radius` Minkowski steps.
BinaryMask dilate_oracle(const BinaryMask& m, int radius, int connectivity) {
  auto step_ok = [&](int dx, int dy, int dz) {
    const int nz = (dx != 0) + (dy != 0) + (dz != 0);
    return connectivity == 26 || (connectivity == 18 && nz <= 2) || (connectivity == 6 && nz <= 1);
  };
  BinaryMask cur = m;
  for (int r = 0; r < radius; ++r) {
    BinaryMask next = cur;
    const auto& s = m.grid.shape;
    for (std::int64_t z = 0; z < s[2]; ++z)
      for (std::int64_t y = 0; y < s[1]; ++y)
        for (std::int64_t x = 0; x < s[0]; ++x) {
          if (!cur(x, y, z)) continue;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx)
                if (step_ok(dx, dy, dz) && m.grid.contains(x + dx, y + dy, z + dz)) next(x + dx, y + dy, z + dz) = 1;
        }
    cur = next;
  }
  return cur;
}

}  // namespace

TEST_CASE("neighbourhood sizes") {
  CHECK(neighbourhood(Connectivity::Six).size() == 6);
  CHECK(neighbourhood(Connectivity::Eighteen).size() == 18);
  CHECK(neighbourhood(Connectivity::TwentySix).size() == 26);
  CHECK(connectivity_from_int(18) == Connectivity::Eighteen);
  CHECK_THROWS_AS(connectivity_from_int(8), Error);
}

TEST_CASE("dilate") {
  SUBCASE("radius zero is the identity") {
    const auto m = checks::random_mask({8, 8, 8}, 0.2, 1);
    CHECK(dilate(m, 0, Connectivity::TwentySix).voxels == m.voxels);
  }
  SUBCASE("interior voxel under 26-connectivity covers 27 voxels") {
    auto m = empty({5, 5, 5});
    m(2, 2, 2) = 1;
    CHECK(count(dilate(m, 1, Connectivity::TwentySix)) == 27);
    CHECK(count(dilate(m, 1, Connectivity::Eighteen)) == 19);
    CHECK(count(dilate(m, 1, Connectivity::Six)) == 7);
  }
  SUBCASE("corner voxel is clipped to 8") {
    auto m = empty({5, 5, 5});
    m(0, 0, 0) = 1;
    CHECK(count(dilate(m, 1, Connectivity::TwentySix)) == 8);
  }
  SUBCASE("random masks agree with direct enumeration") {
    for (int conn : {6, 18, 26}) {
      for (int r : {1, 2}) {
        const auto m = checks::random_mask({10, 9, 8}, 0.03, static_cast<std::uint64_t>(conn * 10 + r));
        CHECK(dilate(m, r, connectivity_from_int(conn)).voxels == dilate_oracle(m, r, conn).voxels);
      }
    }
  }
  SUBCASE("extensive and monotone") {
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto a = checks::random_mask({10, 10, 10}, 0.05, s);
      auto b = a;
      const auto extra = checks::random_mask({10, 10, 10}, 0.05, s + 50);
      for (std::size_t i = 0; i < b.size(); ++i) b.voxels[i] |= extra.voxels[i];
      const auto da = dilate(a, 1, Connectivity::Eighteen);
      CHECK(subset(a, da));
      CHECK(subset(da, dilate(b, 1, Connectivity::Eighteen)));
    }
  }
  SUBCASE("translation-equivariant away from the border") {
    auto a = empty({16, 16, 16});
    a(5, 6, 7) = a(6, 6, 7) = a(8, 9, 5) = 1;
    auto b = empty({16, 16, 16});
    b(7, 5, 8) = b(8, 5, 8) = b(10, 8, 6) = 1;
    const auto da = dilate(a, 2, Connectivity::Six);
    const auto db = dilate(b, 2, Connectivity::Six);
    for (std::int64_t z = 1; z < 14; ++z)
      for (std::int64_t y = 1; y < 15; ++y)
        for (std::int64_t x = 0; x < 14; ++x) CHECK(da(x, y, z) == db(x + 2, y - 1, z + 1));
  }
  SUBCASE("negative radius") { CHECK_THROWS_AS(dilate(empty({2, 2, 2}), -1, Connectivity::Six), Error); }
}

TEST_CASE("connected_components") {
  SUBCASE("empty mask has no components") {
    const auto c = connected_components(empty({4, 4, 4}), Connectivity::TwentySix);
    CHECK(c.count() == 0);
    CHECK(std::all_of(c.ids.begin(), c.ids.end(), [](auto v) { return v == 0; }));
  }
  SUBCASE("corner-sharing voxels") {
    auto m = empty({3, 3, 3});
    m(0, 0, 0) = m(1, 1, 1) = 1;
    CHECK(connected_components(m, Connectivity::TwentySix).count() == 1);
    CHECK(connected_components(m, Connectivity::Eighteen).count() == 2);
    CHECK(connected_components(m, Connectivity::Six).count() == 2);
  }
  SUBCASE("edge-sharing voxels") {
    auto m = empty({3, 3, 3});
    m(0, 0, 0) = m(1, 1, 0) = 1;
    CHECK(connected_components(m, Connectivity::Eighteen).count() == 1);
    CHECK(connected_components(m, Connectivity::Six).count() == 2);
  }
  SUBCASE("partition matches flood fill on random masks") {
    for (int conn : {6, 18, 26}) {
      for (std::uint64_t s = 0; s < 10; ++s) {
        const auto m = checks::random_mask({20, 18, 16}, 0.15 + 0.05 * static_cast<double>(s % 4), s * 31 + conn);
        const auto c = connected_components(m, connectivity_from_int(conn));
        const auto o = oracles::flood_fill_components(m, conn);
        CHECK(oracles::same_partition(o, c.ids));
        CHECK(static_cast<std::size_t>(*std::max_element(o.begin(), o.end())) == c.count());
      }
    }
  }
  SUBCASE("ids are ordered by size, ties by smallest voxel index") {
    auto m = empty({12, 3, 3});
    m(0, 0, 0) = 1;                     // size 1
    m(3, 0, 0) = m(4, 0, 0) = 1;        // size 2, first of the tie
    m(10, 2, 2) = m(11, 2, 2) = 1;      // size 2
    m(7, 1, 1) = m(7, 2, 1) = m(7, 2, 2) = 1;  // size 3
    const auto c = connected_components(m, Connectivity::Six);
    CHECK(c.sizes == std::vector<std::size_t>{3, 2, 2, 1});
    CHECK(c.ids[m.grid.linear(7, 1, 1)] == 1);
    CHECK(c.ids[m.grid.linear(3, 0, 0)] == 2);
    CHECK(c.ids[m.grid.linear(11, 2, 2)] == 3);
    CHECK(c.ids[m.grid.linear(0, 0, 0)] == 4);
  }
  SUBCASE("sizes sum to the foreground count") {
    const auto m = checks::random_mask({16, 16, 16}, 0.3, 77);
    const auto c = connected_components(m, Connectivity::Six);
    CHECK(std::accumulate(c.sizes.begin(), c.sizes.end(), std::size_t{0}) == count(m));
  }
}

TEST_CASE("keep_largest_components") {
  SUBCASE("single component is returned unchanged") {
    auto m = empty({8, 8, 8});
    for (int i = 2; i < 6; ++i) m(i, 3, 3) = 1;
    CHECK(keep_largest_components(m, {}).voxels == m.voxels);
  }
  SUBCASE("three-blob fixture keeps exactly the two larger blobs") {
    const auto m = checks::three_blob_fixture();
    const auto out = keep_largest_components(m, {1, Connectivity::TwentySix, 2});
    CHECK(count(out) == 15);
    CHECK(out(21, 9, 9) == 0);
    CHECK(subset(out, m));
    CHECK(count(keep_largest_components(m, {1, Connectivity::TwentySix, 1})) == 10);
  }
  SUBCASE("blobs two voxels apart are bridged by dilation") {
    auto m = empty({16, 8, 8});
    for (int x = 1; x < 5; ++x) m(x, 3, 3) = 1;  // 4 voxels
    m(7, 3, 3) = 1;                              // gap of two voxels from x=4
    m(14, 6, 6) = m(14, 6, 5) = 1;               // far pair of 2
    const auto out = keep_largest_components(m, {1, Connectivity::TwentySix, 1});
    CHECK(count(out) == 5);
    CHECK(out(7, 3, 3) == 1);
  }
  SUBCASE("grid mismatch is impossible through the single-input API; keep must be positive") {
    CHECK_THROWS_AS(keep_largest_components(empty({2, 2, 2}), {1, Connectivity::Six, 0}), Error);
  }
}

TEST_CASE("postprocess_cs") {
  SUBCASE("clean two-component mask is a fixed point") {
    auto m = empty({20, 10, 10});
    for (int x = 2; x < 6; ++x) m(x, 4, 4) = 1;
    for (int x = 12; x < 17; ++x) m(x, 5, 5) = 1;
    CHECK(postprocess_cs(m).voxels == m.voxels);
  }
  SUBCASE("salt noise is removed and the main components survive") {
    auto m = empty({30, 20, 20});
    for (int x = 2; x < 10; ++x)
      for (int y = 2; y < 5; ++y) m(x, y, 3) = 1;
    for (int x = 18; x < 27; ++x)
      for (int y = 12; y < 15; ++y) m(x, y, 14) = 1;
    auto noisy = m;
    noisy(15, 2, 17) = noisy(2, 17, 10) = noisy(25, 3, 9) = noisy(12, 10, 1) = 1;
    CHECK(postprocess_cs(noisy).voxels == m.voxels);
  }
  SUBCASE("empty mask stays empty") {
    CHECK(count(postprocess_cs(empty({6, 6, 6}))) == 0);
  }
  SUBCASE("idempotent and a subset on random masks") {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto m = checks::random_mask({14, 14, 14}, 0.01 + 0.01 * static_cast<double>(s % 5), s);
      const auto once = postprocess_cs(m);
      CHECK(subset(once, m));
      CHECK(postprocess_cs(once).voxels == once.voxels);
    }
  }
}
