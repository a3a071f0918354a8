// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "scratch.hpp"

#include <sulcikit/checks.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using sulcikit::checks::CheckResult;
using sulcikit::testing::ScratchDir;

namespace {

struct Criterion {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const fs::path& p) { return "\"" + p.string() + "\""; }

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + SULCIKIT_BINARY + "\" " + args + " >>" + quote(log) + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Criterion from_checks(const std::string& name, const std::vector<const CheckResult*>& parts) {
  Criterion c{name, !parts.empty(), ""};
  for (const auto* r : parts) {
    c.passed = c.passed && r->passed;
    if (!c.detail.empty()) c.detail += "; ";
    std::ostringstream d;
    d << r->name << ": " << r->detail << " (observed " << r->observed << ", tolerance " << r->tolerance << ")";
    c.detail += d.str();
  }
  if (parts.empty()) c.detail = "no matching check";
  return c;
}

Criterion end_to_end() {
  Criterion c{"end-to-end CLI: generate -> postprocess -> evaluate, byte-identical reruns", false, ""};
  ScratchDir dir("acceptance");
  const fs::path log = dir / "log.txt";
  const fs::path config = fs::path(SULCIKIT_DATA_DIR) / "run_config.json";
  auto fail = [&](const std::string& why) {
    c.detail = why + " (log: " + slurp(log).substr(0, 2000) + ")";
    return c;
  };

  if (run("phantom --out " + quote(dir / "phantom") + " --subjects 2", log) != 0) return fail("phantom failed");
  const std::string gen = "generate --manifest " + quote(dir / "phantom" / "manifest.json") + " --config " +
                          quote(config) + " --samples 3 --seed 20240601 --out ";
  if (run(gen + quote(dir / "run1"), log) != 0) return fail("first generate failed");
  if (run(gen + quote(dir / "run2") + " --jobs 1", log) != 0) return fail("second generate failed");

  std::vector<fs::path> segs;
  std::size_t volumes = 0, identical = 0;
  for (const auto& e : fs::directory_iterator(dir / "run1")) {
    const auto name = e.path().filename().string();
    if (!name.ends_with(".nii.gz")) continue;
    ++volumes;
    identical += slurp(e.path()) == slurp(dir / "run2" / name);
    if (name.ends_with("_seg.nii.gz")) segs.push_back(e.path());
  }
  if (volumes != 12) return fail("expected 12 generated volumes, found " + std::to_string(volumes));
  if (identical != volumes) return fail("reruns differ in " + std::to_string(volumes - identical) + " files");

  fs::create_directories(dir / "gt");
  std::string inputs;
  for (const auto& s : segs) {
    fs::copy_file(s, dir / "gt" / s.filename());
    inputs += " " + quote(s);
  }
  if (run("postprocess --labels 48,49 --out-dir " + quote(dir / "pred") + " --in" + inputs, log) != 0) {
    return fail("postprocess failed");
  }
  const fs::path report_path = dir / "report.json";
  if (run("evaluate --labels 48,49 --pred-suffix _pp --pred " + quote(dir / "pred") + " --gt " + quote(dir / "gt") +
              " --out " + quote(report_path),
          log) != 0) {
    return fail("evaluate failed");
  }

  nlohmann::json report;
  try {
    report = nlohmann::json::parse(slurp(report_path));
  } catch (const std::exception& e) {
    return fail(std::string("report is not JSON: ") + e.what());
  }
  const bool well_formed = report.contains("pairs") && report["pairs"].is_array() && report["pairs"].size() == 6 &&
                           report.contains("summary") && report["summary"].is_object() &&
                           report["summary"].contains("dsc") && report["summary"].contains("hd_mm");
  if (!well_formed) return fail("report is missing pairs or summary");
  for (const auto& p : report["pairs"]) {
    if (!p["dsc"].is_number() || !p["hd_mm"].is_number()) return fail("pair " + p["id"].dump() + " lacks metrics");
  }
  std::ostringstream d;
  d << "12 volumes byte-identical across runs, 6 pairs evaluated, mean DSC "
    << report["summary"]["dsc"]["mean"].get<double>() << ", mean HD " << report["summary"]["hd_mm"]["mean"].get<double>()
    << " mm";
  c.passed = true;
  c.detail = d.str();
  return c;
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const auto results = sulcikit::checks::run_checks({});
  std::map<std::string, const CheckResult*> by_name;
  for (const auto& r : results) by_name[r.name] = &r;
  auto pick = [&](std::initializer_list<const char*> names) {
    std::vector<const CheckResult*> out;
    for (const char* n : names) {
      if (by_name.contains(n)) out.push_back(by_name[n]);
    }
    return out;
  };

  std::vector<Criterion> criteria{
      from_checks("NT-Xent 4-row fixture equals brute force and ln(1+2/e) within 1e-9", pick({"nt_xent_fixture"})),
      from_checks("single-pair batch: loss exactly 0, gradient exactly 0", pick({"nt_xent_degenerate"})),
      from_checks("analytic gradients match central differences (eps 1e-4, rel err < 1e-5, 20 seeds each)",
                  pick({"contrastive_gradient", "dice_gradient", "tversky_gradient"})),
      from_checks("Tversky(0.5, 0.5) equals soft Dice bitwise on 20 inputs", pick({"tversky_dice_identity"})),
      from_checks("contrastive loss invariant to row scaling and common rotation within 1e-6",
                  pick({"contrastive_invariance"})),
      from_checks("SSL descent demo: loss decreases, positive cosine exceeds negative", pick({"ssl_descent_demo"})),
      from_checks("connected components match flood fill on 100 random 32^3 masks per connectivity",
                  pick({"connected_components"})),
      from_checks("post-processing: three-blob fixture keeps 15 voxels, idempotent, subset",
                  pick({"postprocess"})),
      from_checks("Hausdorff: exact brute-force agreement, 3-4-5 fixture, triangle inequality", pick({"hausdorff"})),
      from_checks("Dice fixtures: identity 1, disjoint 0, half overlap 0.5 within 1e-12", pick({"dice_fixtures"})),
      from_checks("generator determinism (serial and parallel), label closure, deterministic painting",
                  pick({"generator"})),
      from_checks("generated samples keep source shape and spacing", pick({"geometry"})),
      from_checks("NIfTI round trip bit-identical for uint8/int16/float32, gzip and plain",
                  pick({"nifti_roundtrip"})),
      end_to_end(),
  };

  std::size_t passed = 0;
  for (const auto& c : criteria) {
    std::printf("%s  %s\n      %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    passed += c.passed;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%zu/%zu criteria passed in %.1f s\n", passed, criteria.size(), secs);
  return passed == criteria.size() ? 0 : 1;
}
