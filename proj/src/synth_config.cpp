#include <sulcikit/synth_json.hpp>

#include <fstream>
#include <string>

namespace sulcikit::synth {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

Range parse_range(const json& j, const std::string& name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(name + ": expected [low, high]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

// Either one [low, high] shared by all axes or three per-axis ranges.
std::array<Range, 3> parse_axis_ranges(const json& j, const std::string& name) {
  if (j.is_array() && j.size() == 3 && j[0].is_array()) {
    return {parse_range(j[0], name), parse_range(j[1], name), parse_range(j[2], name)};
  }
  const Range r = parse_range(j, name);
  return {r, r, r};
}

std::array<int, 3> parse_lattice(const json& j, const std::string& name) {
  if (j.is_number_integer()) {
    const int v = j.get<int>();
    return {v, v, v};
  }
  if (!j.is_array() || j.size() != 3) fail(name + ": expected an integer or [nx, ny, nz]");
  std::array<int, 3> out{};
  for (int a = 0; a < 3; ++a) {
    if (!j[a].is_number_integer()) fail(name + ": entries must be integers");
    out[a] = j[a].get<int>();
  }
  return out;
}

std::uint16_t parse_label(const json& j, const std::string& name) {
  long long v = 0;
  if (j.is_number_integer()) {
    v = j.get<long long>();
  } else if (j.is_string()) {
    try {
      std::size_t used = 0;
      v = std::stoll(j.get<std::string>(), &used);
      if (used != j.get<std::string>().size()) fail(name + ": not an integer label");
    } catch (const std::logic_error&) {
      fail(name + ": not an integer label");
    }
  } else {
    fail(name + ": expected an integer label");
  }
  if (v < 0 || v > 65535) fail(name + ": label out of range");
  return static_cast<std::uint16_t>(v);
}

json range_json(const Range& r) { return json::array({r.low, r.high}); }

json axis_json(const std::array<Range, 3>& r) {
  return json::array({range_json(r[0]), range_json(r[1]), range_json(r[2])});
}

}  // namespace

GeneratorConfig generator_config_from_json(const json& j) {
  if (!j.is_object()) fail("generator config must be a JSON object");
  GeneratorConfig c;
  try {
    if (j.contains("rotation_range")) c.rotation_range = parse_axis_ranges(j["rotation_range"], "rotation_range");
    if (j.contains("scaling_range")) c.scaling_range = parse_axis_ranges(j["scaling_range"], "scaling_range");
    if (j.contains("shear_range")) c.shear_range = parse_range(j["shear_range"], "shear_range");
    if (j.contains("translation_range")) {
      c.translation_range = parse_axis_ranges(j["translation_range"], "translation_range");
    }
    if (j.contains("elastic_grid")) c.elastic_grid = parse_lattice(j["elastic_grid"], "elastic_grid");
    if (j.contains("elastic_std_range")) c.elastic_std_range = parse_range(j["elastic_std_range"], "elastic_std_range");
    if (j.contains("blur_sigma_range")) c.blur_sigma_range = parse_range(j["blur_sigma_range"], "blur_sigma_range");
    if (j.contains("bias_grid")) c.bias_grid = parse_lattice(j["bias_grid"], "bias_grid");
    if (j.contains("bias_std_range")) c.bias_std_range = parse_range(j["bias_std_range"], "bias_std_range");
    if (j.contains("sulcus_label_range")) {
      const auto& r = j["sulcus_label_range"];
      if (!r.is_array() || r.size() != 2) fail("sulcus_label_range: expected [low, high]");
      c.sulcus_labels = {parse_label(r[0], "sulcus_label_range"), parse_label(r[1], "sulcus_label_range")};
    }
    if (j.contains("substitution_table")) {
      const auto& t = j["substitution_table"];
      if (!t.is_object()) fail("substitution_table: expected an object of label -> label");
      c.substitution_table.clear();
      for (const auto& [key, value] : t.items()) {
        c.substitution_table[parse_label(json(key), "substitution_table key")] =
            parse_label(value, "substitution_table value");
      }
    }
    if (j.contains("normalize")) {
      if (!j["normalize"].is_boolean()) fail("normalize: expected a boolean");
      c.normalize = j["normalize"].get<bool>();
    }
  } catch (const json::exception& e) {
    fail(e.what());
  }
  c.validate();
  return c;
}

json to_json(const GeneratorConfig& c) {
  json table = json::object();
  for (const auto& [from, to] : c.substitution_table) table[std::to_string(from)] = to;
  return {
      {"rotation_range", axis_json(c.rotation_range)},
      {"scaling_range", axis_json(c.scaling_range)},
      {"shear_range", range_json(c.shear_range)},
      {"translation_range", axis_json(c.translation_range)},
      {"elastic_grid", c.elastic_grid},
      {"elastic_std_range", range_json(c.elastic_std_range)},
      {"blur_sigma_range", range_json(c.blur_sigma_range)},
      {"bias_grid", c.bias_grid},
      {"bias_std_range", range_json(c.bias_std_range)},
      {"sulcus_label_range", json::array({c.sulcus_labels.low, c.sulcus_labels.high})},
      {"substitution_table", table},
      {"normalize", c.normalize},
  };
}

TissuePriors priors_from_json(const json& j) {
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("priors")) fail("priors document needs a \"priors\" array");
    list = &j["priors"];
  }
  if (!list->is_array()) fail("priors must be an array");
  TissuePriors p;
  for (const auto& e : *list) {
    if (!e.is_object() || !e.contains("label") || !e.contains("mean_range") || !e.contains("std_range")) {
      fail("each prior needs label, mean_range and std_range");
    }
    const auto label = parse_label(e["label"], "prior label");
    if (p.entries.contains(label)) fail("duplicate prior for label " + std::to_string(label));
    p.entries[label] = {parse_range(e["mean_range"], "mean_range"), parse_range(e["std_range"], "std_range")};
  }
  p.validate();
  return p;
}

json to_json(const TissuePriors& priors) {
  json list = json::array();
  for (const auto& [label, e] : priors.entries) {
    list.push_back({{"label", label}, {"mean_range", range_json(e.mean_range)}, {"std_range", range_json(e.std_range)}});
  }
  return {{"priors", list}};
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path.string() + ": " + e.what());
  }
}

}  // namespace sulcikit::synth
