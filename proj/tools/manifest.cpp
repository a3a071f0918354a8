#include "manifest.hpp"

#include <sulcikit/synth_json.hpp>

#include <set>

namespace sulcikit::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

std::string require_string(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key) || !j[key].is_string()) fail(context + ": missing string field \"" + key + "\"");
  return j[key].get<std::string>();
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  const json j = synth::load_json(path);
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array()) {
    fail(path.string() + ": manifest needs an \"entries\" array");
  }
  DatasetManifest m;
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  m.root = base;
  if (j.contains("root")) {
    if (!j["root"].is_string()) fail("manifest root must be a string");
    const fs::path root = j["root"].get<std::string>();
    m.root = root.is_absolute() ? root : base / root;
  }

  std::set<std::string> ids;
  for (const auto& e : j["entries"]) {
    if (!e.is_object()) fail("manifest entries must be objects");
    ManifestEntry entry;
    entry.id = require_string(e, "id", "manifest entry");
    if (entry.id.empty() || entry.id.find('/') != std::string::npos) fail("invalid subject id \"" + entry.id + "\"");
    if (!ids.insert(entry.id).second) fail("duplicate subject id \"" + entry.id + "\"");
    entry.label_map = require_string(e, "label_map", "entry " + entry.id);
    entry.label_map_path = m.root / entry.label_map;
    if (!fs::exists(entry.label_map_path)) {
      throw Error(ErrorCode::IoError, "label map not found: " + entry.label_map_path.string());
    }
    if (e.contains("tissue_map") && !e["tissue_map"].is_null()) {
      entry.tissue_map = require_string(e, "tissue_map", "entry " + entry.id);
      entry.tissue_map_path = m.root / *entry.tissue_map;
      if (!fs::exists(*entry.tissue_map_path)) {
        throw Error(ErrorCode::IoError, "tissue map not found: " + entry.tissue_map_path->string());
      }
    }
    m.entries.push_back(std::move(entry));
  }
  if (m.entries.empty()) fail(path.string() + ": manifest has no entries");
  return m;
}

json to_json(const DatasetManifest& manifest) {
  json entries = json::array();
  for (const auto& e : manifest.entries) {
    json item = {{"id", e.id}, {"label_map", e.label_map}};
    if (e.tissue_map) item["tissue_map"] = *e.tissue_map;
    entries.push_back(item);
  }
  return {{"entries", entries}};
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) fail("run config must be a JSON object");
  RunConfig c;
  try {
    if (j.contains("generator")) c.generator = synth::generator_config_from_json(j["generator"]);
    if (j.contains("priors")) {
      const auto& p = j["priors"];
      c.priors = p.is_string() ? synth::priors_from_json(synth::load_json(base_dir / p.get<std::string>()))
                               : synth::priors_from_json(p);
    }
    if (j.contains("samples_per_subject")) {
      if (!j["samples_per_subject"].is_number_integer() || j["samples_per_subject"].get<long long>() < 1) {
        fail("samples_per_subject must be an integer >= 1");
      }
      c.samples_per_subject = j["samples_per_subject"].get<std::size_t>();
    }
    if (j.contains("master_seed")) {
      if (!j["master_seed"].is_number_unsigned()) fail("master_seed must be a non-negative integer");
      c.master_seed = j["master_seed"].get<std::uint64_t>();
    }
    if (j.contains("output_dir")) c.output_dir = base_dir / j["output_dir"].get<std::string>();
  } catch (const json::exception& e) {
    fail(e.what());
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  const fs::path base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  return run_config_from_json(synth::load_json(path), base);
}

json to_json(const OutputManifest& manifest) {
  json samples = json::array();
  for (const auto& s : manifest.samples) {
    samples.push_back({{"id", s.id},
                       {"source", s.source},
                       {"sample", s.sample},
                       {"seed", s.seed},
                       {"image", s.image},
                       {"segmentation", s.segmentation}});
  }
  return {{"master_seed", manifest.master_seed}, {"samples", samples}};
}

OutputManifest output_manifest_from_json(const json& j) {
  OutputManifest m;
  try {
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& s : j.at("samples")) {
      m.samples.push_back({s.at("id").get<std::string>(), s.at("source").get<std::string>(),
                           s.at("sample").get<std::size_t>(), s.at("seed").get<std::uint64_t>(),
                           s.at("image").get<std::string>(), s.at("segmentation").get<std::string>()});
    }
  } catch (const json::exception& e) {
    fail(std::string("output manifest: ") + e.what());
  }
  return m;
}

}  // namespace sulcikit::cli
