#pragma once

#include <sulcikit/volume.hpp>

#include <optional>
#include <string>
#include <vector>

namespace sulcikit::metrics {

// 2|X n Y| / (|X| + |Y|). Throws BothEmpty when both masks are empty.
double dice(const BinaryMask& x, const BinaryMask& y);

/// Symmetric Hausdorff distance in mm between the foreground voxel centres of
/// two masks, using the grid spacing. Computed from exact Euclidean distance
/// transforms; equal to the brute-force max-min over all voxel pairs.
double hausdorff(const BinaryMask& x, const BinaryMask& y);
double hausdorff(const BinaryMask& x, const BinaryMask& y, const Vec3& spacing);

// Squared distance (mm^2) from every voxel to the nearest foreground voxel.
// Infinite everywhere when the mask is empty.
std::vector<double> squared_distance_transform(const BinaryMask& mask, const Vec3& spacing);

double voxel_volume(const BinaryMask& mask);
double voxel_volume(const BinaryMask& mask, const Vec3& spacing);

// Total area of foreground faces that touch background or the volume edge.
double voxel_surface_area(const BinaryMask& mask);
double voxel_surface_area(const BinaryMask& mask, const Vec3& spacing);

struct PairReport {
  std::string id;
  std::optional<double> dsc;    // undefined when both masks are empty
  std::optional<double> hd_mm;  // undefined when either mask is empty
  double pred_volume_mm3 = 0.0;
  double gt_volume_mm3 = 0.0;
  double pred_surface_mm2 = 0.0;
  double gt_surface_mm2 = 0.0;

  bool flagged() const { return !dsc || !hd_mm; }
};

PairReport evaluate_pair(const BinaryMask& pred, const BinaryMask& gt, const std::string& id);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

struct CohortSummary {
  MetricSummary dsc;
  MetricSummary hd_mm;
  MetricSummary pred_volume_mm3;
  MetricSummary gt_volume_mm3;
  MetricSummary pred_surface_mm2;
  MetricSummary gt_surface_mm2;
  std::size_t flagged = 0;
};

MetricSummary summarize(std::vector<double> values);

// Flagged entries are excluded from every metric and counted separately.
CohortSummary aggregate(const std::vector<PairReport>& reports);

}  // namespace sulcikit::metrics
