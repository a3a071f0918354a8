#pragma once

#include <sulcikit/volume.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sulcikit::checks {

struct CheckResult {
  std::string name;
  std::string description;
  double tolerance = 0.0;
  double observed = 0.0;
  bool passed = false;
  std::string detail;
  // Named quantities reported alongside the observed error.
  std::map<std::string, double> values;
};

struct CheckOptions {
  // Substring filter on check names; empty runs everything.
  std::string filter;
  // Fault-injection hook: added to every analytic gradient entry before it
  // is compared with finite differences.
  double gradient_perturbation = 0.0;
  unsigned jobs = 0;
  // Where the NIfTI round-trip check writes; defaults to the system temp dir.
  std::filesystem::path scratch_dir;
};

std::vector<std::string> check_names();
std::vector<CheckResult> run_checks(const CheckOptions& options = {});
bool all_passed(const std::vector<CheckResult>& results);
nlohmann::json to_json(const std::vector<CheckResult>& results);

// Shared fixtures.
BinaryMask random_mask(const Index3& shape, double density, std::uint64_t seed);
// Three separated blobs of 10, 5 and 1 voxels in a 24x12x12 grid.
BinaryMask three_blob_fixture();

}  // namespace sulcikit::checks
