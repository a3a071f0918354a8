#include <sulcikit/metrics.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sulcikit::metrics {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact 1D squared distance transform (lower envelope of parabolas) along a
// strided line. f holds squared distances from previous passes.
void edt_line(const double* f, double* out, std::int64_t n, double step, std::vector<std::int64_t>& v,
              std::vector<double>& boundary) {
  const double s2 = step * step;
  v.assign(static_cast<std::size_t>(n), 0);
  boundary.assign(static_cast<std::size_t>(n) + 1, 0.0);
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      boundary[0] = -kInf;
      boundary[1] = kInf;
      continue;
    }
    double s;
    while (true) {
      const auto p = v[static_cast<std::size_t>(k)];
      s = ((f[q] + s2 * static_cast<double>(q * q)) - (f[p] + s2 * static_cast<double>(p * p))) /
          (2.0 * s2 * static_cast<double>(q - p));
      if (s <= boundary[static_cast<std::size_t>(k)] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= boundary[static_cast<std::size_t>(k)]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      boundary[0] = -kInf;
      boundary[1] = kInf;
      continue;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    boundary[static_cast<std::size_t>(k)] = s;
    boundary[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    for (std::int64_t q = 0; q < n; ++q) out[q] = kInf;
    return;
  }
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (boundary[static_cast<std::size_t>(j) + 1] < static_cast<double>(q)) ++j;
    const auto p = v[static_cast<std::size_t>(j)];
    const double d = step * static_cast<double>(q - p);
    out[q] = f[p] + d * d;
  }
}

double directed_max_min(const BinaryMask& from, const std::vector<double>& to_distance) {
  double worst = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from.voxels[i]) worst = std::max(worst, to_distance[i]);
  }
  return worst;
}

}  // namespace

double dice(const BinaryMask& x, const BinaryMask& y) {
  require_same_grid(x.grid, y.grid, "dice");
  std::size_t nx = 0, ny = 0, both = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool a = x.voxels[i] != 0, b = y.voxels[i] != 0;
    nx += a;
    ny += b;
    both += a && b;
  }
  if (nx + ny == 0) throw Error(ErrorCode::BothEmpty, "dice of two empty masks");
  return 2.0 * static_cast<double>(both) / static_cast<double>(nx + ny);
}

std::vector<double> squared_distance_transform(const BinaryMask& mask, const Vec3& spacing) {
  const auto& shape = mask.grid.shape;
  std::vector<double> cur(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) cur[i] = mask.voxels[i] ? 0.0 : kInf;

  std::vector<double> line, result;
  std::vector<std::int64_t> v;
  std::vector<double> boundary;
  const std::int64_t stride[3] = {1, shape[0], shape[0] * shape[1]};
  // Passes x, y, z: each accumulates (step * d)^2 in that order.
  for (int axis = 0; axis < 3; ++axis) {
    const std::int64_t n = shape[axis];
    line.resize(static_cast<std::size_t>(n));
    result.resize(static_cast<std::size_t>(n));
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (std::int64_t j = 0; j < shape[a2]; ++j) {
      for (std::int64_t i = 0; i < shape[a1]; ++i) {
        const std::int64_t base = i * stride[a1] + j * stride[a2];
        for (std::int64_t q = 0; q < n; ++q) line[static_cast<std::size_t>(q)] = cur[static_cast<std::size_t>(base + q * stride[axis])];
        edt_line(line.data(), result.data(), n, spacing[axis], v, boundary);
        for (std::int64_t q = 0; q < n; ++q) cur[static_cast<std::size_t>(base + q * stride[axis])] = result[static_cast<std::size_t>(q)];
      }
    }
  }
  return cur;
}

double hausdorff(const BinaryMask& x, const BinaryMask& y) { return hausdorff(x, y, x.grid.spacing); }

double hausdorff(const BinaryMask& x, const BinaryMask& y, const Vec3& spacing) {
  require_same_grid(x.grid, y.grid, "hausdorff");
  if (count(x) == 0) throw Error(ErrorCode::EmptySet, "hausdorff: first mask is empty");
  if (count(y) == 0) throw Error(ErrorCode::EmptySet, "hausdorff: second mask is empty");
  const double xy = directed_max_min(x, squared_distance_transform(y, spacing));
  const double yx = directed_max_min(y, squared_distance_transform(x, spacing));
  return std::sqrt(std::max(xy, yx));
}

double voxel_volume(const BinaryMask& mask) { return voxel_volume(mask, mask.grid.spacing); }

double voxel_volume(const BinaryMask& mask, const Vec3& spacing) {
  return static_cast<double>(count(mask)) * spacing[0] * spacing[1] * spacing[2];
}

double voxel_surface_area(const BinaryMask& mask) { return voxel_surface_area(mask, mask.grid.spacing); }

double voxel_surface_area(const BinaryMask& mask, const Vec3& spacing) {
  const auto& g = mask.grid;
  const double face_area[3] = {spacing[1] * spacing[2], spacing[0] * spacing[2], spacing[0] * spacing[1]};
  std::size_t exposed[3] = {0, 0, 0};
  for (std::int64_t z = 0; z < g.shape[2]; ++z) {
    for (std::int64_t y = 0; y < g.shape[1]; ++y) {
      for (std::int64_t x = 0; x < g.shape[0]; ++x) {
        if (!mask(x, y, z)) continue;
        const Index3 p{x, y, z};
        for (int axis = 0; axis < 3; ++axis) {
          for (int dir : {-1, 1}) {
            Index3 q = p;
            q[axis] += dir;
            if (!g.contains(q[0], q[1], q[2]) || !mask(q[0], q[1], q[2])) ++exposed[axis];
          }
        }
      }
    }
  }
  return static_cast<double>(exposed[0]) * face_area[0] + static_cast<double>(exposed[1]) * face_area[1] +
         static_cast<double>(exposed[2]) * face_area[2];
}

PairReport evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, const std::string& id) {
  require_same_grid(pred.grid, gt.grid, "evaluate_pair");
  PairReport r;
  r.id = id;
  const auto np = count(pred), ng = count(gt);
  if (np + ng > 0) r.dsc = dice(pred, gt);
  if (np > 0 && ng > 0) r.hd_mm = hausdorff(pred, gt);
  r.pred_volume_mm3 = voxel_volume(pred);
  r.gt_volume_mm3 = voxel_volume(gt);
  r.pred_surface_mm2 = voxel_surface_area(pred);
  r.gt_surface_mm2 = voxel_surface_area(gt);
  return r;
}

MetricSummary summarize(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::NoValidEntries, "no values to summarize");
  std::sort(values.begin(), values.end());
  MetricSummary s;
  s.count = values.size();
  s.min = values.front();
  s.max = values.back();
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

CohortSummary aggregate(const std::vector<PairReport>& reports) {
  std::vector<double> dsc, hd, pv, gv, ps, gs;
  CohortSummary out;
  for (const auto& r : reports) {
    if (r.flagged()) {
      ++out.flagged;
      continue;
    }
    dsc.push_back(*r.dsc);
    hd.push_back(*r.hd_mm);
    pv.push_back(r.pred_volume_mm3);
    gv.push_back(r.gt_volume_mm3);
    ps.push_back(r.pred_surface_mm2);
    gs.push_back(r.gt_surface_mm2);
  }
  if (dsc.empty()) throw Error(ErrorCode::NoValidEntries, "every report entry is flagged");
  out.dsc = summarize(std::move(dsc));
  out.hd_mm = summarize(std::move(hd));
  out.pred_volume_mm3 = summarize(std::move(pv));
  out.gt_volume_mm3 = summarize(std::move(gv));
  out.pred_surface_mm2 = summarize(std::move(ps));
  out.gt_surface_mm2 = summarize(std::move(gs));
  return out;
}

}  // namespace sulcikit::metrics
