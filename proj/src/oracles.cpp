#include <sulcikit/oracles.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>

namespace sulcikit::oracles {

double nt_xent_total(const std::vector<std::vector<double>>& rows, double temperature) {
  auto sim = [&](std::size_t i, std::size_t j) {
    double d = 0, ni = 0, nj = 0;
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      d += rows[i][k] * rows[j][k];
      ni += rows[i][k] * rows[i][k];
      nj += rows[j][k] * rows[j][k];
    }
    return d / (std::sqrt(ni) * std::sqrt(nj));
  };
  auto ell = [&](std::size_t i, std::size_t j) {
    double denom = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (k != i) denom += std::exp(sim(i, k) / temperature);
    }
    return -std::log(std::exp(sim(i, j) / temperature) / denom);
  };
  const std::size_t n_pairs = rows.size() / 2;
  double total = 0;
  for (std::size_t k = 1; k <= n_pairs; ++k) {
    // 1-indexed rows 2k-1 and 2k.
    total += ell(2 * k - 2, 2 * k - 1) + ell(2 * k - 1, 2 * k - 2);
  }
  return total / (2.0 * static_cast<double>(n_pairs));
}

std::vector<int> flood_fill_components(const BinaryMask& mask, int connectivity) {
  const auto& s = mask.grid.shape;
  std::vector<int> ids(mask.size(), 0);
  int next = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.voxels[start] || ids[start]) continue;
    ++next;
    std::deque<std::size_t> queue{start};
    ids[start] = next;
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      const auto c = mask.grid.coords(cur);
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          for (std::int64_t dx = -1; dx <= 1; ++dx) {
            const auto manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
            if (manhattan == 0) continue;
            if (connectivity == 6 && manhattan > 1) continue;
            if (connectivity == 18 && manhattan > 2) continue;
            const auto x = c[0] + dx, y = c[1] + dy, z = c[2] + dz;
            if (x < 0 || y < 0 || z < 0 || x >= s[0] || y >= s[1] || z >= s[2]) continue;
            const auto n = static_cast<std::size_t>(x + s[0] * (y + s[1] * z));
            if (mask.voxels[n] && !ids[n]) {
              ids[n] = next;
              queue.push_back(n);
            }
          }
        }
      }
    }
  }
  return ids;
}

template <typename A, typename B>
bool same_partition(const std::vector<A>& a, const std::vector<B>& b) {
  if (a.size() != b.size()) return false;
  std::map<A, B> forward;
  std::map<B, A> backward;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    auto [f, fnew] = forward.emplace(a[i], b[i]);
    if (!fnew && f->second != b[i]) return false;
    auto [r, rnew] = backward.emplace(b[i], a[i]);
    if (!rnew && r->second != a[i]) return false;
  }
  return true;
}

template bool same_partition(const std::vector<int>&, const std::vector<std::uint32_t>&);
template bool same_partition(const std::vector<int>&, const std::vector<int>&);

double hausdorff(const BinaryMask& x, const BinaryMask& y, const Vec3& spacing) {
  std::vector<Index3> px, py;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x.voxels[i]) px.push_back(x.grid.coords(i));
    if (y.voxels[i]) py.push_back(y.grid.coords(i));
  }
  auto directed = [&](const std::vector<Index3>& from, const std::vector<Index3>& to) {
    double worst = 0;
    for (const auto& a : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : to) {
        const double dx = static_cast<double>(a[0] - b[0]) * spacing[0];
        const double dy = static_cast<double>(a[1] - b[1]) * spacing[1];
        const double dz = static_cast<double>(a[2] - b[2]) * spacing[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::sqrt(std::max(directed(px, py), directed(py, px)));
}

}  // namespace sulcikit::oracles
