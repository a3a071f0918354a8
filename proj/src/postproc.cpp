#include <sulcikit/postproc.hpp>

#include <algorithm>
#include <numeric>
#include <string>

namespace sulcikit::postproc {
namespace {

// Union-find over linear voxel indices.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Smaller index becomes the root so roots are the first voxel seen.
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

Connectivity connectivity_from_int(int value) {
  switch (value) {
    case 6: return Connectivity::Six;
    case 18: return Connectivity::Eighteen;
    case 26: return Connectivity::TwentySix;
    default: throw Error(ErrorCode::InvalidArgument, "connectivity must be 6, 18 or 26");
  }
}

std::vector<Index3> neighbourhood(Connectivity connectivity) {
  const int limit = connectivity == Connectivity::Six ? 1 : connectivity == Connectivity::Eighteen ? 2 : 3;
  std::vector<Index3> out;
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const int nonzero = (dx != 0) + (dy != 0) + (dz != 0);
        if (nonzero == 0 || nonzero > limit) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

void PostprocConfig::validate() const {
  if (dilation_radius < 0) throw Error(ErrorCode::InvalidArgument, "dilation radius must be >= 0");
  if (keep < 1) throw Error(ErrorCode::InvalidArgument, "keep must be >= 1");
  connectivity_from_int(static_cast<int>(connectivity));
}

BinaryMask dilate(const BinaryMask& mask, int radius, Connectivity connectivity) {
  if (radius < 0) throw Error(ErrorCode::InvalidArgument, "dilation radius must be >= 0");
  const auto offsets = neighbourhood(connectivity);
  const auto& shape = mask.grid.shape;
  BinaryMask current = mask;
  for (int iter = 0; iter < radius; ++iter) {
    BinaryMask next = current;
    for (std::int64_t z = 0; z < shape[2]; ++z) {
      for (std::int64_t y = 0; y < shape[1]; ++y) {
        for (std::int64_t x = 0; x < shape[0]; ++x) {
          if (!current(x, y, z)) continue;
          for (const auto& o : offsets) {
            const auto nx = x + o[0], ny = y + o[1], nz = z + o[2];
            if (mask.grid.contains(nx, ny, nz)) next(nx, ny, nz) = 1;
          }
        }
      }
    }
    current = std::move(next);
  }
  return current;
}

ComponentLabeling connected_components(const BinaryMask& mask, Connectivity connectivity) {
  const auto& grid = mask.grid;
  const auto& shape = grid.shape;
  // Only neighbours that precede the voxel in scan order.
  std::vector<Index3> backward;
  for (const auto& o : neighbourhood(connectivity)) {
    if (o[2] < 0 || (o[2] == 0 && (o[1] < 0 || (o[1] == 0 && o[0] < 0)))) backward.push_back(o);
  }

  DisjointSet sets(mask.size());
  for (std::int64_t z = 0; z < shape[2]; ++z) {
    for (std::int64_t y = 0; y < shape[1]; ++y) {
      for (std::int64_t x = 0; x < shape[0]; ++x) {
        if (!mask(x, y, z)) continue;
        const auto here = grid.linear(x, y, z);
        for (const auto& o : backward) {
          const auto nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (grid.contains(nx, ny, nz) && mask(nx, ny, nz)) sets.unite(here, grid.linear(nx, ny, nz));
        }
      }
    }
  }

  // Roots are the smallest linear index of each component.
  std::vector<std::size_t> roots;
  std::vector<std::size_t> root_size(mask.size(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask.voxels[i]) continue;
    const auto r = sets.find(i);
    if (root_size[r]++ == 0) roots.push_back(r);
  }
  std::stable_sort(roots.begin(), roots.end(),
                   [&](std::size_t a, std::size_t b) { return root_size[a] > root_size[b]; });

  std::vector<std::uint32_t> root_id(mask.size(), 0);
  ComponentLabeling out{grid, std::vector<std::uint32_t>(mask.size(), 0), {}};
  out.sizes.reserve(roots.size());
  for (std::size_t c = 0; c < roots.size(); ++c) {
    root_id[roots[c]] = static_cast<std::uint32_t>(c + 1);
    out.sizes.push_back(root_size[roots[c]]);
  }
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.voxels[i]) out.ids[i] = root_id[sets.find(i)];
  }
  return out;
}

BinaryMask keep_largest_components(const BinaryMask& original, const PostprocConfig& config) {
  config.validate();
  const BinaryMask dilated = dilate(original, config.dilation_radius, config.connectivity);
  const ComponentLabeling components = connected_components(dilated, config.connectivity);
  BinaryMask out(original.grid);
  for (std::size_t i = 0; i < original.size(); ++i) {
    const auto id = components.ids[i];
    out.voxels[i] = (original.voxels[i] && id != 0 && id <= config.keep) ? 1 : 0;
  }
  return out;
}

BinaryMask postprocess_cs(const BinaryMask& pred, const PostprocConfig& config) {
  return keep_largest_components(pred, config);
}

}  // namespace sulcikit::postproc
