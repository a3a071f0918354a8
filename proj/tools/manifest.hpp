#pragma once

#include <sulcikit/synth.hpp>

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sulcikit::cli {

struct ManifestEntry {
  std::string id;
  // As written in the manifest (used verbatim in output manifests).
  std::string label_map;
  std::optional<std::string> tissue_map;
  // Resolved against the manifest root.
  std::filesystem::path label_map_path;
  std::optional<std::filesystem::path> tissue_map_path;
};

/// Input subjects: {"root": optional dir, "entries": [{"id", "label_map",
/// "tissue_map"?}]}. A relative root is taken relative to the manifest file;
/// the default root is the manifest's own directory.
struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const DatasetManifest& manifest);

inline constexpr std::size_t kDefaultSamplesPerSubject = 100;

struct RunConfig {
  synth::GeneratorConfig generator;
  synth::TissuePriors priors = synth::default_t1w_priors();
  std::size_t samples_per_subject = kDefaultSamplesPerSubject;
  std::uint64_t master_seed = 0;
  std::optional<std::filesystem::path> output_dir;
};

// "priors" may be inline or a path relative to the config file.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

struct OutputEntry {
  std::string id;
  std::string source;
  std::size_t sample = 0;
  std::uint64_t seed = 0;
  std::string image;
  std::string segmentation;

  bool operator==(const OutputEntry&) const = default;
};

struct OutputManifest {
  std::uint64_t master_seed = 0;
  std::vector<OutputEntry> samples;
};

nlohmann::json to_json(const OutputManifest& manifest);
OutputManifest output_manifest_from_json(const nlohmann::json& j);

}  // namespace sulcikit::cli
