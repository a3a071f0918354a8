#include <sulcikit/checks.hpp>

#include <sulcikit/losses.hpp>
#include <sulcikit/metrics.hpp>
#include <sulcikit/nifti.hpp>
#include <sulcikit/oracles.hpp>
#include <sulcikit/phantom.hpp>
#include <sulcikit/postproc.hpp>
#include <sulcikit/synth.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace sulcikit::checks {
namespace {

using losses::EmbeddingBatch;

struct Check {
  std::string name;
  std::string description;
  std::function<CheckResult(const CheckOptions&)> run;
};

CheckResult make(const std::string& name, double tolerance, double observed, bool passed, std::string detail = {}) {
  CheckResult r;
  r.name = name;
  r.tolerance = tolerance;
  r.observed = observed;
  r.passed = passed;
  r.detail = std::move(detail);
  return r;
}

std::vector<std::vector<double>> rows_of(const EmbeddingBatch& b) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < b.rows(); ++i) rows.emplace_back(b.row(i).begin(), b.row(i).end());
  return rows;
}

EmbeddingBatch fixture_batch() { return EmbeddingBatch(4, 2, {1, 0, 1, 0, 0, 1, 0, 1}); }

ProbabilityVolume random_probabilities(const Index3& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  ProbabilityVolume p(VoxelGrid(shape, {1, 1, 1}));
  for (auto& v : p.voxels) v = u(rng);
  return p;
}

losses::GradientCheck perturbed_check(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> analytic, std::span<const double> point,
                                      double eps, double perturbation) {
  for (auto& g : analytic) g += perturbation;
  return losses::finite_difference_check(f, analytic, point, eps);
}

CheckResult check_nt_xent_fixture(const CheckOptions&) {
  const auto batch = fixture_batch();
  const double value = losses::contrastive_loss(batch, 1.0);
  const double brute = oracles::nt_xent_total(rows_of(batch), 1.0);
  const double closed_form = std::log(1.0 + 2.0 / std::exp(1.0));
  const double err = std::max(std::abs(value - brute), std::abs(value - closed_form));
  std::ostringstream d;
  d.precision(12);
  d << "loss=" << value << " brute_force=" << brute << " ln(1+2/e)=" << closed_form;
  auto r = make("nt_xent_fixture", 1e-9, err, err <= 1e-9, d.str());
  r.values = {{"loss", value}, {"brute_force", brute}, {"closed_form", closed_form}};
  return r;
}

CheckResult check_degenerate_batch(const CheckOptions&) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto batch = losses::random_batch(1, 8, seed);
    worst = std::max(worst, std::abs(losses::contrastive_loss(batch, 0.5)));
    for (double g : losses::contrastive_loss_grad(batch, 0.5)) worst = std::max(worst, std::abs(g));
  }
  return make("nt_xent_degenerate", 0.0, worst, worst == 0.0, "N=1: loss and gradient exactly zero");
}

CheckResult check_contrastive_gradient(const CheckOptions& opt) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto batch = losses::random_batch(2 + seed % 3, 8, 1000 + seed);
    auto f = [&](std::span<const double> x) {
      return losses::contrastive_loss(EmbeddingBatch(batch.rows(), batch.dim(), {x.begin(), x.end()}), 0.5);
    };
    const auto r = perturbed_check(f, losses::contrastive_loss_grad(batch, 0.5), batch.values(), 1e-4,
                                   opt.gradient_perturbation);
    worst = std::max(worst, r.max_relative_error);
  }
  return make("contrastive_gradient", 1e-5, worst, worst < 1e-5, "20 seeded batches, tau=0.5, eps=1e-4");
}

CheckResult seg_gradient(const std::string& name, losses::SegLoss kind, const losses::SegLossParams& params,
                         const CheckOptions& opt) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pred = random_probabilities({6, 6, 6}, 2000 + seed);
    const auto target = random_mask({6, 6, 6}, 0.3, 3000 + seed);
    auto f = [&](std::span<const double> x) {
      return losses::seg_loss(kind, ProbabilityVolume(pred.grid, std::vector<double>(x.begin(), x.end())), target,
                              params);
    };
    const auto r = perturbed_check(f, losses::seg_loss_grad(kind, pred, target, params), pred.voxels, 1e-4,
                                   opt.gradient_perturbation);
    worst = std::max(worst, r.max_relative_error);
  }
  return make(name, 1e-5, worst, worst < 1e-5, "20 seeded 6^3 volumes, eps=1e-4");
}

CheckResult check_tversky_dice_identity(const CheckOptions&) {
  int mismatches = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pred = random_probabilities({8, 8, 8}, 4000 + seed);
    const auto target = random_mask({8, 8, 8}, 0.2, 5000 + seed);
    const double smooth = seed % 2 ? 1e-5 : 1.0;
    if (losses::tversky_loss(pred, target, 0.5, 0.5, smooth) != losses::soft_dice_loss(pred, target, smooth)) {
      ++mismatches;
    }
  }
  return make("tversky_dice_identity", 0.0, mismatches, mismatches == 0, "bitwise equality on 20 inputs");
}

CheckResult check_invariance(const CheckOptions&) {
  double worst = 0.0;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto batch = losses::random_batch(4, 6, 6000 + seed);
    const double base = losses::contrastive_loss(batch, 0.5);

    auto scaled = batch;
    for (std::size_t i = 0; i < scaled.rows(); ++i) {
      const double s = scale(rng);
      for (auto& v : scaled.row(i)) v *= s;
    }
    worst = std::max(worst, std::abs(losses::contrastive_loss(scaled, 0.5) - base));

    // Random orthogonal matrix via Gram-Schmidt.
    const std::size_t d = batch.dim();
    std::vector<std::vector<double>> q(d, std::vector<double>(d));
    for (auto& row : q) {
      for (auto& v : row) v = normal(rng);
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double proj = 0;
        for (std::size_t k = 0; k < d; ++k) proj += q[i][k] * q[j][k];
        for (std::size_t k = 0; k < d; ++k) q[i][k] -= proj * q[j][k];
      }
      double n = 0;
      for (double v : q[i]) n += v * v;
      n = std::sqrt(n);
      for (auto& v : q[i]) v /= n;
    }
    auto rotated = batch;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0;
        for (std::size_t k = 0; k < d; ++k) acc += q[i][k] * batch.row(r)[k];
        rotated.row(r)[i] = acc;
      }
    }
    worst = std::max(worst, std::abs(losses::contrastive_loss(rotated, 0.5) - base));
  }
  return make("contrastive_invariance", 1e-6, worst, worst <= 1e-6, "per-row scaling and common rotation");
}

CheckResult check_descent(const CheckOptions&) {
  const auto init = losses::random_batch(8, 16, 42);
  const auto traj = losses::optimize_embeddings_demo(init, 0.5, 200, 0.5);
  const auto& first = traj.front();
  const auto& last = traj.back();
  const bool ok = last.loss < first.loss && last.mean_positive_similarity > last.mean_negative_similarity;
  std::ostringstream d;
  d << "loss " << first.loss << " -> " << last.loss << ", positive cos " << last.mean_positive_similarity
    << ", negative cos " << last.mean_negative_similarity;
  return make("ssl_descent_demo", 0.0, last.loss - first.loss, ok, d.str());
}

CheckResult check_components(const CheckOptions&) {
  int mismatches = 0;
  for (int conn : {6, 18, 26}) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const double density = 0.15 + 0.35 * static_cast<double>(seed % 7) / 6.0;
      const auto mask = random_mask({32, 32, 32}, density, 7000 + seed * 3 + static_cast<std::uint64_t>(conn));
      const auto labeling = postproc::connected_components(mask, postproc::connectivity_from_int(conn));
      const auto oracle = oracles::flood_fill_components(mask, conn);
      if (!oracles::same_partition(oracle, labeling.ids)) ++mismatches;
    }
  }
  return make("connected_components", 0.0, mismatches, mismatches == 0,
              "100 random 32^3 masks per connectivity vs breadth-first flood fill");
}

CheckResult check_postproc(const CheckOptions&) {
  std::ostringstream d;
  bool ok = true;
  const auto blobs = three_blob_fixture();
  postproc::PostprocConfig cfg;
  const auto kept = postproc::keep_largest_components(blobs, cfg);
  const auto kept_count = count(kept);
  if (kept_count != 15) ok = false;
  d << "three-blob fixture kept " << kept_count << " voxels";

  int violations = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto mask = random_mask({20, 20, 20}, 0.02 + 0.01 * static_cast<double>(seed % 5), 8000 + seed);
    const auto once = postproc::postprocess_cs(mask);
    const auto twice = postproc::postprocess_cs(once);
    bool subset = true;
    for (std::size_t i = 0; i < mask.size(); ++i) subset = subset && (!once.voxels[i] || mask.voxels[i]);
    if (once.voxels != twice.voxels || !subset) ++violations;
  }
  if (violations) ok = false;
  d << "; idempotence/subset violations " << violations << " of 50";
  return make("postprocess", 0.0, static_cast<double>(violations) + std::abs(static_cast<double>(kept_count) - 15.0),
              ok, d.str());
}

CheckResult check_hausdorff(const CheckOptions&) {
  std::ostringstream d;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = random_mask({16, 16, 16}, 0.02 + 0.02 * static_cast<double>(seed % 4), 9000 + seed);
    const auto y = random_mask({16, 16, 16}, 0.03, 9500 + seed);
    if (count(x) == 0 || count(y) == 0) continue;
    worst = std::max(worst, std::abs(metrics::hausdorff(x, y) - oracles::hausdorff(x, y, x.grid.spacing)));
  }
  BinaryMask a(VoxelGrid({8, 8, 8}, {1, 1, 1})), b(a.grid);
  a(0, 0, 0) = 1;
  b(3, 4, 0) = 1;
  const double fixture = metrics::hausdorff(a, b);

  double triangle = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = random_mask({12, 12, 12}, 0.02, 10000 + seed);
    const auto y = random_mask({12, 12, 12}, 0.02, 11000 + seed);
    const auto z = random_mask({12, 12, 12}, 0.02, 12000 + seed);
    if (!count(x) || !count(y) || !count(z)) continue;
    triangle = std::max(triangle, metrics::hausdorff(x, z) - metrics::hausdorff(x, y) - metrics::hausdorff(y, z));
  }
  const bool ok = worst == 0.0 && fixture == 5.0 && triangle <= 1e-9;
  d << "max |dt - brute| = " << worst << "; fixture = " << fixture << "; max triangle excess = " << triangle;
  return make("hausdorff", 0.0, worst, ok, d.str());
}

CheckResult check_dice(const CheckOptions&) {
  BinaryMask x(VoxelGrid({4, 4, 4}, {1, 1, 1})), y(x.grid);
  x(0, 0, 0) = x(1, 0, 0) = 1;
  const double identity = metrics::dice(x, x);
  y(2, 2, 2) = y(3, 3, 3) = 1;
  const double disjoint = metrics::dice(x, y);
  y = BinaryMask(x.grid);
  y(1, 0, 0) = y(2, 0, 0) = 1;
  const double half = metrics::dice(x, y);
  const double err = std::max({std::abs(identity - 1.0), std::abs(disjoint), std::abs(half - 0.5)});
  return make("dice_fixtures", 1e-12, err, err <= 1e-12, "identity, disjoint, half overlap");
}

CheckResult check_generator(const CheckOptions& opt) {
  std::ostringstream d;
  bool ok = true;
  const auto labels = phantom::make_phantom({32, 32, 24});
  const auto priors = synth::default_t1w_priors();
  const synth::GeneratorConfig config;

  const auto serial = synth::generate_views(labels, priors, config, 11, 4, 1);
  const auto parallel = synth::generate_views(labels, priors, config, 11, 4, std::max(2u, opt.jobs));
  for (std::size_t i = 0; i < serial.size(); ++i) {
    if (serial[i].image.voxels != parallel[i].image.voxels || serial[i].labels.voxels != parallel[i].labels.voxels) {
      ok = false;
      d << "serial/parallel view " << i << " differ; ";
    }
  }
  const auto again = synth::generate_sample(labels, priors, config, 5);
  const auto repeat = synth::generate_sample(labels, priors, config, 5);
  if (again.image.voxels != repeat.image.voxels || again.labels.voxels != repeat.labels.voxels) {
    ok = false;
    d << "same seed differs; ";
  }

  auto allowed = labels_present(labels);
  allowed.insert(0);
  std::size_t unseen = 0;
  for (const auto& v : synth::generate_views(labels, priors, config, 2024, 100, opt.jobs)) {
    for (auto l : labels_present(v.labels)) unseen += !allowed.contains(l);
  }
  if (unseen) ok = false;
  d << "100 views: unseen labels " << unseen;

  synth::TissuePriors flat;
  flat.entries[1] = {synth::Range::fixed(30), synth::Range::fixed(0)};
  flat.entries[2] = {synth::Range::fixed(100), synth::Range::fixed(0)};
  flat.entries[3] = {synth::Range::fixed(150), synth::Range::fixed(0)};
  const auto off = synth::GeneratorConfig::deterministic();
  const auto painted = synth::generate_sample(labels, flat, off, 3);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto l = labels.voxels[i];
    if (off.substitution_table.contains(l)) l = off.substitution_table.at(l);
    const double mean = l == 0 ? 0.0 : flat.entries.at(l).mean_range.low;
    if (painted.image.voxels[i] != static_cast<float>(mean / 150.0)) ++wrong;
  }
  if (wrong || painted.labels.voxels != labels.voxels) ok = false;
  d << "; painting mismatches " << wrong;
  return make("generator", 0.0, static_cast<double>(unseen + wrong), ok, d.str());
}

CheckResult check_geometry(const CheckOptions& opt) {
  auto labels = phantom::make_phantom({30, 26, 20});
  labels.grid.spacing = {0.9, 1.1, 1.3};
  labels.grid.affine = diagonal_affine(labels.grid.spacing);
  labels.grid.affine[3] = -12.5;
  labels.grid.affine[7] = 4.0;
  labels.grid.affine[11] = 30.25;
  std::size_t changed = 0;
  for (const auto& v : synth::generate_views(labels, synth::default_t1w_priors(), {}, 77, 100, opt.jobs)) {
    changed += !same_geometry(v.image.grid, labels.grid, 0.0) || !same_geometry(v.labels.grid, labels.grid, 0.0);
  }
  std::ostringstream d;
  d << "100 views on an anisotropic, translated grid: geometry changes " << changed;
  return make("geometry", 0.0, static_cast<double>(changed), changed == 0, d.str());
}

CheckResult check_nifti(const CheckOptions& opt) {
  namespace fs = std::filesystem;
  const fs::path dir = (opt.scratch_dir.empty() ? fs::temp_directory_path() : opt.scratch_dir) /
                       ("sulcikit_check_" + std::to_string(std::random_device{}()));
  fs::create_directories(dir);
  std::size_t failures = 0;
  std::ostringstream d;
  try {
    VoxelGrid grid({5, 4, 3}, {1.0, 1.0, 1.25});
    std::mt19937_64 rng(99);
    struct Case {
      nifti::Datatype dt;
      double lo, hi;
    };
    for (const Case c : {Case{nifti::Datatype::Uint8, 0, 255}, Case{nifti::Datatype::Int16, -32768, 32767},
                         Case{nifti::Datatype::Float32, -1e3, 1e3}}) {
      nifti::Image img{grid, c.dt, std::vector<double>(grid.size())};
      std::uniform_real_distribution<double> u(c.lo, c.hi);
      for (auto& v : img.values) v = nifti::is_integer(c.dt) ? std::round(u(rng)) : static_cast<float>(u(rng));
      for (const char* ext : {".nii", ".nii.gz"}) {
        const auto path = dir / (std::string("case") + std::to_string(static_cast<int>(c.dt)) + ext);
        nifti::write(img, path);
        const auto back = nifti::read(path);
        if (back.values != img.values || back.datatype != c.dt || !same_geometry(back.grid, grid, 1e-6)) {
          ++failures;
          d << path.filename().string() << " mismatch; ";
        }
      }
    }
  } catch (const std::exception& e) {
    ++failures;
    d << e.what();
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (!failures) d << "uint8/int16/float32, plain and gzip";
  return make("nifti_roundtrip", 0.0, static_cast<double>(failures), failures == 0, d.str());
}

const std::vector<Check>& registry() {
  static const std::vector<Check> checks = {
      {"nt_xent_fixture", "4-row fixture equals brute force and ln(1+2/e)", check_nt_xent_fixture},
      {"nt_xent_degenerate", "single-pair batch has zero loss and gradient", check_degenerate_batch},
      {"contrastive_gradient", "analytic vs central differences", check_contrastive_gradient},
      {"dice_gradient", "analytic vs central differences",
       [](const CheckOptions& o) { return seg_gradient("dice_gradient", losses::SegLoss::Dice, {0.5, 0.5, 1.0}, o); }},
      {"tversky_gradient", "analytic vs central differences",
       [](const CheckOptions& o) {
         return seg_gradient("tversky_gradient", losses::SegLoss::Tversky, {0.3, 0.7, 1e-5}, o);
       }},
      {"tversky_dice_identity", "tversky(0.5, 0.5) equals soft dice bitwise", check_tversky_dice_identity},
      {"contrastive_invariance", "scale and rotation invariance of the contrastive loss", check_invariance},
      {"ssl_descent_demo", "gradient descent separates positive from negative pairs", check_descent},
      {"connected_components", "union-find labelling matches flood fill", check_components},
      {"postprocess", "largest-component filtering fixture, idempotence, subset", check_postproc},
      {"hausdorff", "distance transform matches brute force; fixture; triangle inequality", check_hausdorff},
      {"dice_fixtures", "dice identity, disjoint and half-overlap fixtures", check_dice},
      {"generator", "determinism, label closure, deterministic painting", check_generator},
      {"geometry", "generated samples keep the source shape, spacing and affine", check_geometry},
      {"nifti_roundtrip", "bit-identical voxel round trip", check_nifti},
  };
  return checks;
}

}  // namespace

BinaryMask random_mask(const Index3& shape, double density, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution on(density);
  BinaryMask m(VoxelGrid(shape, {1, 1, 1}));
  for (auto& v : m.voxels) v = on(rng) ? 1 : 0;
  return m;
}

BinaryMask three_blob_fixture() {
  BinaryMask m(VoxelGrid({24, 12, 12}, {1, 1, 1}));
  for (int x = 2; x < 4; ++x) {
    for (int y = 2; y < 7; ++y) m(x, y, 2) = 1;  // 10 voxels
  }
  for (int x = 12; x < 17; ++x) m(x, 3, 6) = 1;  // 5 voxels
  m(21, 9, 9) = 1;                               // 1 voxel
  return m;
}

std::vector<std::string> check_names() {
  std::vector<std::string> names;
  for (const auto& c : registry()) names.push_back(c.name);
  return names;
}

std::vector<CheckResult> run_checks(const CheckOptions& options) {
  std::vector<CheckResult> results;
  for (const auto& c : registry()) {
    if (!options.filter.empty() && c.name.find(options.filter) == std::string::npos) continue;
    CheckResult r;
    try {
      r = c.run(options);
    } catch (const std::exception& e) {
      r = make(c.name, 0.0, std::nan(""), false, std::string("exception: ") + e.what());
    }
    r.description = c.description;
    results.push_back(std::move(r));
  }
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const CheckResult& r) { return r.passed; });
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : results) {
    list.push_back({{"name", r.name},
                    {"description", r.description},
                    {"status", r.passed ? "pass" : "fail"},
                    {"tolerance", r.tolerance},
                    {"observed", std::isfinite(r.observed) ? nlohmann::json(r.observed) : nlohmann::json()},
                    {"detail", r.detail},
                    {"values", r.values}});
  }
  return {{"passed", all_passed(results)}, {"checks", list}};
}

}  // namespace sulcikit::checks
