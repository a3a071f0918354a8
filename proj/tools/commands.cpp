#include "commands.hpp"

#include "manifest.hpp"

#include <sulcikit/checks.hpp>
#include <sulcikit/metrics.hpp>
#include <sulcikit/nifti.hpp>
#include <sulcikit/parallel.hpp>
#include <sulcikit/phantom.hpp>
#include <sulcikit/synth.hpp>
#include <sulcikit/synth_json.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

namespace sulcikit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::string sample_name(const std::string& id, std::size_t k, const char* kind) {
  std::ostringstream s;
  s << id << '_' << std::setw(3) << std::setfill('0') << k << '_' << kind << ".nii.gz";
  return s.str();
}

bool is_nifti(const fs::path& p) {
  const auto name = p.filename().string();
  auto ends_with = [&](const std::string& e) {
    return name.size() > e.size() && name.compare(name.size() - e.size(), e.size(), e) == 0;
  };
  return ends_with(".nii") || ends_with(".nii.gz");
}

std::map<std::string, fs::path> nifti_by_stem(const fs::path& dir, const std::string& strip_suffix) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || !is_nifti(e.path())) continue;
    std::string stem = nifti::stem(e.path());
    if (!strip_suffix.empty() && stem.size() > strip_suffix.size() &&
        stem.compare(stem.size() - strip_suffix.size(), strip_suffix.size(), strip_suffix) == 0) {
      stem.resize(stem.size() - strip_suffix.size());
    }
    out[stem] = e.path();
  }
  return out;
}

BinaryMask foreground(const LabelVolume& labels, const std::optional<LabelSet>& set) {
  return set ? binarize(labels, *set) : nonzero_mask(labels);
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(); }

json summary_json(const metrics::MetricSummary& s) {
  return {{"mean", s.mean}, {"std", s.stddev}, {"median", s.median},
          {"min", s.min},   {"max", s.max},    {"count", s.count}};
}

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::setprecision(17) << *v;
  return s.str();
}

unsigned env_jobs(unsigned requested) {
  if (const char* env = std::getenv("SULCIKIT_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return requested;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kConfigFailure;
  }
}

Index3 parse_shape(const std::vector<std::int64_t>& v) {
  if (v.size() != 3) throw Error(ErrorCode::ConfigError, "shape needs three integers");
  return {v[0], v[1], v[2]};
}

}  // namespace

int exit_code_for(const Error& error) {
  switch (error.code()) {
    case ErrorCode::IoError:
    case ErrorCode::CorruptHeader:
    case ErrorCode::UnsupportedDatatype:
    case ErrorCode::NonIntegerLabels:
    case ErrorCode::GridMismatch:
      return kIoFailure;
    default:
      return kConfigFailure;
  }
}

int cmd_generate(const GenerateOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    RunConfig config = load_run_config(options.config);
    if (options.seed) config.master_seed = *options.seed;
    if (options.samples) {
      if (*options.samples < 1) throw Error(ErrorCode::ConfigError, "samples must be >= 1");
      config.samples_per_subject = *options.samples;
    }
    const fs::path out_dir = options.out ? *options.out
                             : config.output_dir ? *config.output_dir
                                                 : throw Error(ErrorCode::ConfigError, "no output directory given");
    const DatasetManifest manifest = load_manifest(options.manifest);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string());

    const fs::path manifest_path = out_dir / "manifest.json";
    OutputManifest previous;
    if (fs::exists(manifest_path)) previous = output_manifest_from_json(synth::load_json(manifest_path));

    // Every (subject, sample) slot with its expected manifest entry.
    struct Task {
      std::size_t subject;
      OutputEntry entry;
      bool done = false;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < manifest.entries.size(); ++s) {
      const auto& e = manifest.entries[s];
      const std::uint64_t subject_seed = synth::mix(config.master_seed, s);
      for (std::size_t k = 0; k < config.samples_per_subject; ++k) {
        OutputEntry entry{e.id, e.label_map, k, synth::mix(subject_seed, k), sample_name(e.id, k, "img"),
                          sample_name(e.id, k, "seg")};
        const bool exists = fs::exists(out_dir / entry.image) && fs::exists(out_dir / entry.segmentation);
        const bool recorded = previous.master_seed == config.master_seed &&
                              std::find(previous.samples.begin(), previous.samples.end(), entry) !=
                                  previous.samples.end();
        tasks.push_back({s, entry, exists && recorded});
      }
    }
    const auto pending = std::count_if(tasks.begin(), tasks.end(), [](const Task& t) { return !t.done; });
    log << "generate: " << manifest.entries.size() << " subject(s), " << config.samples_per_subject
        << " sample(s) each, " << (tasks.size() - static_cast<std::size_t>(pending)) << " already present\n";

    std::vector<std::optional<LabelVolume>> sources(manifest.entries.size());
    std::mutex source_mutex;
    auto source_for = [&](std::size_t s) -> const LabelVolume& {
      std::lock_guard lock(source_mutex);
      if (!sources[s]) {
        const auto& e = manifest.entries[s];
        LabelVolume labels = nifti::read_labels(e.label_map_path);
        if (e.tissue_map_path) labels = synth::combine_label_maps(nifti::read_labels(*e.tissue_map_path), labels);
        sources[s] = std::move(labels);
      }
      return *sources[s];
    };

    int status = kSuccess;
    std::string first_error;
    try {
      parallel_for(tasks.size(), env_jobs(options.jobs), [&](std::size_t i) {
        Task& t = tasks[i];
        if (t.done) return;
        const auto sample = synth::generate_sample(source_for(t.subject), config.priors, config.generator, t.entry.seed);
        nifti::write(sample.image, out_dir / t.entry.image);
        nifti::write(sample.labels, out_dir / t.entry.segmentation);
        t.done = true;
      });
    } catch (const Error& e) {
      status = exit_code_for(e);
      first_error = e.what();
    }

    OutputManifest result{config.master_seed, {}};
    for (const auto& t : tasks) {
      if (t.done) result.samples.push_back(t.entry);
    }
    std::sort(result.samples.begin(), result.samples.end(), [](const OutputEntry& a, const OutputEntry& b) {
      return std::tie(a.id, a.sample) < std::tie(b.id, b.sample);
    });
    write_text(manifest_path, to_json(result).dump(2) + "\n");

    if (status != kSuccess) {
      log << "error: " << first_error << '\n';
      return status;
    }
    log << "generate: wrote " << pending << " sample pair(s) to " << out_dir.string() << '\n';
    return static_cast<int>(kSuccess);
  });
}

int cmd_postprocess(const PostprocessOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    options.config.validate();
    if (options.inputs.empty()) throw Error(ErrorCode::ConfigError, "no input masks given");
    for (const auto& in : options.inputs) {
      if (!fs::exists(in)) throw Error(ErrorCode::IoError, "no such file: " + in.string());
    }
    if (options.out_dir) fs::create_directories(*options.out_dir);
    for (const auto& in : options.inputs) {
      nifti::Image image = nifti::read(in);
      BinaryMask mask(image.grid);
      for (std::size_t i = 0; i < image.values.size(); ++i) {
        const double v = image.values[i];
        bool on = v != 0.0;
        if (options.labels) {
          on = v >= 0.0 && v <= 65535.0 && v == static_cast<double>(static_cast<std::uint16_t>(v)) &&
               options.labels->contains(static_cast<std::uint16_t>(v));
        }
        mask.voxels[i] = on ? 1 : 0;
      }
      const BinaryMask kept = postproc::postprocess_cs(mask, options.config);
      for (std::size_t i = 0; i < image.values.size(); ++i) {
        if (!kept.voxels[i]) image.values[i] = 0.0;
      }
      const std::string ext = nifti::is_gzip_path(in) ? ".nii.gz" : ".nii";
      const fs::path dir = options.out_dir ? *options.out_dir : in.parent_path();
      const fs::path out = dir / (nifti::stem(in) + "_pp" + ext);
      nifti::write(image, out);
      log << "postprocess: " << in.string() << " -> " << out.string() << " (" << count(mask) << " -> "
          << count(kept) << " voxels)\n";
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const auto preds = nifti_by_stem(options.pred_dir, options.pred_suffix);
    const auto gts = nifti_by_stem(options.gt_dir, "");

    std::vector<std::string> ids;
    json unmatched_pred = json::array(), unmatched_gt = json::array();
    for (const auto& [stem, path] : preds) {
      if (gts.contains(stem)) ids.push_back(stem);
      else unmatched_pred.push_back(path.filename().string());
    }
    for (const auto& [stem, path] : gts) {
      if (!preds.contains(stem)) unmatched_gt.push_back(path.filename().string());
    }
    for (const auto& f : unmatched_pred) log << "warning: no ground truth for " << f.get<std::string>() << '\n';
    for (const auto& f : unmatched_gt) log << "warning: no prediction for " << f.get<std::string>() << '\n';
    if (ids.empty()) {
      log << "error: no prediction/ground-truth pairs matched\n";
      return static_cast<int>(kNoPairs);
    }

    std::vector<metrics::PairReport> reports(ids.size());
    parallel_for(ids.size(), env_jobs(options.jobs), [&](std::size_t i) {
      const auto pred = foreground(nifti::read_labels(preds.at(ids[i])), options.labels);
      const auto gt = foreground(nifti::read_labels(gts.at(ids[i])), options.labels);
      reports[i] = metrics::evaluate_pair(pred, gt, ids[i]);
    });

    json pairs = json::array();
    for (const auto& r : reports) {
      pairs.push_back({{"id", r.id},
                       {"dsc", optional_number(r.dsc)},
                       {"hd_mm", optional_number(r.hd_mm)},
                       {"pred_volume_mm3", r.pred_volume_mm3},
                       {"gt_volume_mm3", r.gt_volume_mm3},
                       {"pred_surface_mm2", r.pred_surface_mm2},
                       {"gt_surface_mm2", r.gt_surface_mm2},
                       {"flagged", r.flagged()}});
    }
    json report = {{"pairs", pairs},
                   {"summary", nullptr},
                   {"flagged", 0},
                   {"unmatched", {{"pred", unmatched_pred}, {"gt", unmatched_gt}}}};
    try {
      const auto summary = metrics::aggregate(reports);
      report["summary"] = {{"dsc", summary_json(summary.dsc)},
                           {"hd_mm", summary_json(summary.hd_mm)},
                           {"pred_volume_mm3", summary_json(summary.pred_volume_mm3)},
                           {"gt_volume_mm3", summary_json(summary.gt_volume_mm3)},
                           {"pred_surface_mm2", summary_json(summary.pred_surface_mm2)},
                           {"gt_surface_mm2", summary_json(summary.gt_surface_mm2)}};
      report["flagged"] = summary.flagged;
      log << "evaluate: " << reports.size() << " pair(s), mean DSC " << summary.dsc.mean << ", mean HD "
          << summary.hd_mm.mean << " mm, " << summary.flagged << " flagged\n";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidEntries) throw;
      report["flagged"] = reports.size();
      log << "warning: every pair has an empty mask; no summary\n";
    }

    const std::string text = report.dump(2) + "\n";
    if (options.out) write_text(*options.out, text);
    else out << text;

    if (options.csv) {
      std::ostringstream csv;
      csv << "id,dsc,hd_mm,pred_volume_mm3,gt_volume_mm3,pred_surface_mm2,gt_surface_mm2\n";
      for (const auto& r : reports) {
        csv << r.id << ',' << csv_number(r.dsc) << ',' << csv_number(r.hd_mm) << ','
            << csv_number(r.pred_volume_mm3) << ',' << csv_number(r.gt_volume_mm3) << ','
            << csv_number(r.pred_surface_mm2) << ',' << csv_number(r.gt_surface_mm2) << '\n';
      }
      write_text(*options.csv, csv.str());
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_check(const CheckCommandOptions& options, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    checks::CheckOptions opt;
    opt.filter = options.filter;
    opt.gradient_perturbation = options.inject_gradient_fault;
    opt.jobs = env_jobs(options.jobs);
    const auto results = checks::run_checks(opt);
    if (results.empty()) throw Error(ErrorCode::ConfigError, "no check matches filter \"" + options.filter + "\"");
    for (const auto& r : results) {
      log << (r.passed ? "pass " : "FAIL ") << r.name << "  " << r.detail << '\n';
    }
    const std::string text = checks::to_json(results).dump(2) + "\n";
    if (options.out) write_text(*options.out, text);
    else out << text;
    return static_cast<int>(checks::all_passed(results) ? kSuccess : kCheckFailed);
  });
}

int cmd_phantom(const PhantomOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    if (options.subjects < 1) throw Error(ErrorCode::ConfigError, "subjects must be >= 1");
    fs::create_directories(options.out_dir);
    json entries = json::array();
    for (std::size_t s = 0; s < options.subjects; ++s) {
      std::ostringstream id;
      id << "phantom" << std::setw(2) << std::setfill('0') << s + 1;
      const std::string file = id.str() + "_labels.nii.gz";
      nifti::write(phantom::make_phantom(options.shape, static_cast<int>(s)), options.out_dir / file);
      entries.push_back({{"id", id.str()}, {"label_map", file}});
    }
    write_text(options.out_dir / "manifest.json", json{{"entries", entries}}.dump(2) + "\n");
    log << "phantom: wrote " << options.subjects << " label map(s) and manifest.json to "
        << options.out_dir.string() << '\n';
    return static_cast<int>(kSuccess);
  });
}

int cmd_preprocess(const PreprocessOptions& options, std::ostream& log) {
  return guarded(log, [&] {
    if (options.labels) {
      const auto cropped = crop_to_content(nifti::read_labels(options.input), options.margin);
      nifti::write(resample(cropped.volume, options.shape, Interpolation::Nearest), options.output);
    } else {
      const auto cropped = crop_to_content(nifti::read_intensity(options.input), options.margin);
      nifti::write(resample(cropped.volume, options.shape, Interpolation::Trilinear), options.output);
    }
    log << "preprocess: wrote " << options.output.string() << '\n';
    return static_cast<int>(kSuccess);
  });
}

int run(int argc, char** argv) {
  CLI::App app{"sulcikit: synthetic label-map augmentation, contrastive/segmentation losses, "
               "central-sulcus post-processing and evaluation"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  auto* generate = app.add_subcommand("generate", "Generate synthetic image/segmentation pairs offline");
  generate->add_option("--manifest", gen.manifest, "Dataset manifest (JSON)")->required();
  generate->add_option("--config", gen.config, "Run config (JSON)")->required();
  auto* seed_opt = generate->add_option("--seed", seed, "Master seed (overrides the config)");
  generate->add_option("--out", gen.out, "Output directory");
  auto* samples_opt = generate->add_option("--samples", samples, "Samples per subject (overrides the config)");
  generate->add_option("--jobs", gen.jobs, "Worker threads (0 = all cores; SULCIKIT_JOBS overrides)");

  PostprocessOptions pp;
  int connectivity = 26;
  int keep = 2;
  std::vector<int> pp_labels;
  std::string pp_out_dir;
  auto* postprocess = app.add_subcommand("postprocess", "Keep the largest dilated components of CS masks");
  postprocess->add_option("--in", pp.inputs, "Input mask(s)")->required()->expected(1, -1);
  postprocess->add_option("--radius", pp.config.dilation_radius, "Dilation radius in voxels")->capture_default_str();
  postprocess->add_option("--connectivity", connectivity, "6, 18 or 26")->capture_default_str();
  postprocess->add_option("--keep", keep, "Number of components to keep")->capture_default_str();
  auto* pp_labels_opt = postprocess->add_option("--labels", pp_labels, "Foreground labels (default: nonzero)")
                            ->delimiter(',');
  postprocess->add_option("--out-dir", pp_out_dir, "Write outputs here instead of next to the inputs");

  EvaluateOptions ev;
  std::vector<int> ev_labels;
  std::string ev_out, ev_csv;
  auto* evaluate = app.add_subcommand("evaluate", "Dice, Hausdorff, volume and surface for pred/gt pairs");
  evaluate->add_option("--pred", ev.pred_dir, "Prediction directory")->required();
  evaluate->add_option("--gt", ev.gt_dir, "Ground-truth directory")->required();
  evaluate->add_option("--out", ev_out, "JSON report path (default: stdout)");
  evaluate->add_option("--csv", ev_csv, "Optional per-pair CSV");
  auto* ev_labels_opt = evaluate->add_option("--labels", ev_labels, "Foreground labels (default: nonzero)")
                            ->delimiter(',');
  evaluate->add_option("--pred-suffix", ev.pred_suffix, "Suffix stripped from prediction stems, e.g. _pp");
  evaluate->add_option("--jobs", ev.jobs, "Worker threads (0 = all cores; SULCIKIT_JOBS overrides)");

  CheckCommandOptions ck;
  std::string ck_out;
  auto* check = app.add_subcommand("check", "Run the built-in oracle and gradient checks");
  check->add_option("--filter", ck.filter, "Only run checks whose name contains this");
  check->add_option("--out", ck_out, "JSON report path (default: stdout)");
  check->add_option("--inject-gradient-fault", ck.inject_gradient_fault)->group("");

  PhantomOptions ph;
  std::vector<std::int64_t> ph_shape{64, 64, 48};
  auto* phantom_cmd = app.add_subcommand("phantom", "Write toy phantom label maps and a dataset manifest");
  phantom_cmd->add_option("--out", ph.out_dir, "Output directory")->required();
  phantom_cmd->add_option("--subjects", ph.subjects, "Number of subjects")->capture_default_str();
  phantom_cmd->add_option("--shape", ph_shape, "Volume shape")->delimiter(',')->expected(3);

  PreprocessOptions pre;
  std::vector<std::int64_t> pre_shape{256, 256, 124};
  auto* preprocess = app.add_subcommand("preprocess", "Crop to content and resample to a fixed shape");
  preprocess->add_option("--in", pre.input, "Input volume")->required();
  preprocess->add_option("--out", pre.output, "Output volume")->required();
  preprocess->add_option("--margin", pre.margin, "Crop margin in voxels")->capture_default_str();
  preprocess->add_option("--shape", pre_shape, "Target shape")->delimiter(',')->expected(3);
  preprocess->add_flag("--labels", pre.labels, "Treat input as a label map (nearest-neighbour)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(kConfigFailure);
  }

  auto to_label_set = [](const std::vector<int>& v) {
    LabelSet s;
    for (int l : v) {
      if (l < 0 || l > 65535) throw Error(ErrorCode::ConfigError, "label out of range");
      s.insert(static_cast<std::uint16_t>(l));
    }
    return s;
  };

  try {
    if (*generate) {
      if (*seed_opt) gen.seed = seed;
      if (*samples_opt) gen.samples = samples;
      return cmd_generate(gen, std::cerr);
    }
    if (*postprocess) {
      pp.config.connectivity = postproc::connectivity_from_int(connectivity);
      if (keep < 1) throw Error(ErrorCode::ConfigError, "--keep must be >= 1");
      pp.config.keep = static_cast<std::size_t>(keep);
      if (*pp_labels_opt) pp.labels = to_label_set(pp_labels);
      if (!pp_out_dir.empty()) pp.out_dir = pp_out_dir;
      return cmd_postprocess(pp, std::cerr);
    }
    if (*evaluate) {
      if (!ev_out.empty()) ev.out = ev_out;
      if (!ev_csv.empty()) ev.csv = ev_csv;
      if (*ev_labels_opt) ev.labels = to_label_set(ev_labels);
      return cmd_evaluate(ev, std::cout, std::cerr);
    }
    if (*check) {
      if (!ck_out.empty()) ck.out = ck_out;
      return cmd_check(ck, std::cout, std::cerr);
    }
    if (*phantom_cmd) {
      ph.shape = parse_shape(ph_shape);
      return cmd_phantom(ph, std::cerr);
    }
    if (*preprocess) {
      pre.shape = parse_shape(pre_shape);
      return cmd_preprocess(pre, std::cerr);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return static_cast<int>(kConfigFailure);
}

}  // namespace sulcikit::cli
