#pragma once

#include <sulcikit/postproc.hpp>
#include <sulcikit/volume.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sulcikit::cli {

// Stable process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kConfigFailure = 1,
  kIoFailure = 2,
  kNoPairs = 3,
  kCheckFailed = 4,
};

int exit_code_for(const Error& error);

struct GenerateOptions {
  std::filesystem::path manifest;
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::size_t> samples;
  unsigned jobs = 0;
};
int cmd_generate(const GenerateOptions& options, std::ostream& log);

struct PostprocessOptions {
  std::vector<std::filesystem::path> inputs;
  postproc::PostprocConfig config;
  // Foreground labels; nonzero voxels when unset.
  std::optional<LabelSet> labels;
  std::optional<std::filesystem::path> out_dir;
};
int cmd_postprocess(const PostprocessOptions& options, std::ostream& log);

struct EvaluateOptions {
  std::filesystem::path pred_dir;
  std::filesystem::path gt_dir;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> csv;
  std::optional<LabelSet> labels;
  // Removed from prediction stems before pairing, e.g. "_pp".
  std::string pred_suffix;
  unsigned jobs = 0;
};
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& log);

struct CheckCommandOptions {
  std::string filter;
  double inject_gradient_fault = 0.0;
  std::optional<std::filesystem::path> out;
  unsigned jobs = 0;
};
int cmd_check(const CheckCommandOptions& options, std::ostream& out, std::ostream& log);

struct PhantomOptions {
  std::filesystem::path out_dir;
  std::size_t subjects = 2;
  Index3 shape{64, 64, 48};
};
int cmd_phantom(const PhantomOptions& options, std::ostream& log);

struct PreprocessOptions {
  std::filesystem::path input;
  std::filesystem::path output;
  std::int64_t margin = 0;
  Index3 shape{256, 256, 124};
  bool labels = false;
};
int cmd_preprocess(const PreprocessOptions& options, std::ostream& log);

// Parses argv and dispatches; returns the process exit code.
int run(int argc, char** argv);

}  // namespace sulcikit::cli
