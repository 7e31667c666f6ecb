#include "pano/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pano {

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (sample_steps < 1) throw ConfigError("sample_steps must be >= 1");
  blend.validate();
  seams.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("not a valid number: '" + v + "'");
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"depth", [](RunConfig& c, const std::string& v) { c.model.depth = parse_number<int>(v); }},
      {"channels", [](RunConfig& c, const std::string& v) { c.model.channels = parse_number<int>(v); }},
      {"heads", [](RunConfig& c, const std::string& v) { c.model.heads = parse_number<int>(v); }},
      {"face_size", [](RunConfig& c, const std::string& v) { c.model.face_size = parse_number<int>(v); }},
      {"patch", [](RunConfig& c, const std::string& v) { c.model.patch = parse_number<int>(v); }},
      {"latent_channels", [](RunConfig& c, const std::string& v) { c.model.latent_channels = parse_number<int>(v); }},
      {"tokens_per_face", [](RunConfig&, const std::string&) {}},  // checked after all keys are read
      {"vocab", [](RunConfig& c, const std::string& v) { c.model.vocab = parse_number<int>(v); }},
      {"cond_tokens", [](RunConfig& c, const std::string& v) { c.model.cond_tokens = parse_number<int>(v); }},
      {"mlp_ratio", [](RunConfig& c, const std::string& v) { c.model.mlp_ratio = parse_number<int>(v); }},
      {"rope_base", [](RunConfig& c, const std::string& v) { c.model.rope_base = parse_number<double>(v); }},
      {"init_seed", [](RunConfig& c, const std::string& v) { c.model.init_seed = parse_number<std::uint64_t>(v); }},
      {"steps", [](RunConfig& c, const std::string& v) { c.train.steps = parse_number<int>(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<int>(v); }},
      {"lr", [](RunConfig& c, const std::string& v) { c.train.lr = parse_number<double>(v); }},
      {"optimizer",
       [](RunConfig& c, const std::string& v) {
         if (v == "sgd")
           c.train.optimizer = OptimizerKind::Sgd;
         else if (v == "adam")
           c.train.optimizer = OptimizerKind::Adam;
         else
           throw ConfigError("optimizer must be 'sgd' or 'adam', got '" + v + "'");
       }},
      {"seed", [](RunConfig& c, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(v); }},
      {"dataset_scenes", [](RunConfig& c, const std::string& v) { c.train.dataset_scenes = parse_number<int>(v); }},
      {"sample_steps", [](RunConfig& c, const std::string& v) { c.sample_steps = parse_number<int>(v); }},
      {"blend_iterations", [](RunConfig& c, const std::string& v) { c.blend.iterations = parse_number<int>(v); }},
      {"band_frac", [](RunConfig& c, const std::string& v) { c.seams.band_frac = parse_number<double>(v); }},
      {"value_scale",
       [](RunConfig& c, const std::string& v) {
         if (v == "byte")
           c.seams.value_scale = ValueScale::Byte;
         else if (v == "unit")
           c.seams.value_scale = ValueScale::Unit;
         else
           throw ConfigError("value_scale must be 'byte' or 'unit', got '" + v + "'");
       }},
  };
  return table;
}

std::string key_list() {
  std::string s;
  for (const auto& [k, _] : setters()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::optional<int> tokens_per_face;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(stripped).substr(0, eq));
    const std::string value = trim(std::string_view(stripped).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    const auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigError(where + "unknown key '" + key + "'; valid keys: " + key_list());
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      if (key == "tokens_per_face")
        tokens_per_face = parse_number<int>(value);
      else
        it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  cfg.validate();
  if (tokens_per_face && *tokens_per_face != cfg.model.tokens_per_face())
    throw ConfigError("tokens_per_face = " + std::to_string(*tokens_per_face) + " disagrees with (face_size/patch)^2 = " +
                      std::to_string(cfg.model.tokens_per_face()));
  return cfg;
}

RunConfig read_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string model_config_text(const ModelConfig& m) {
  std::ostringstream s;
  s.precision(17);
  s << "depth = " << m.depth << "\n"
    << "channels = " << m.channels << "\n"
    << "heads = " << m.heads << "\n"
    << "face_size = " << m.face_size << "\n"
    << "patch = " << m.patch << "\n"
    << "latent_channels = " << m.latent_channels << "\n"
    << "vocab = " << m.vocab << "\n"
    << "cond_tokens = " << m.cond_tokens << "\n"
    << "mlp_ratio = " << m.mlp_ratio << "\n"
    << "rope_base = " << m.rope_base << "\n"
    << "init_seed = " << m.init_seed << "\n";
  return s.str();
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("manifest '" + path.string() + "': parse error at byte " + std::to_string(e.byte) + ": " +
                      e.what());
  }
  DatasetManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.generator_version = j.at("generator_version").get<std::string>();
    std::set<std::string> ids;
    const auto base = path.parent_path();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.scene_id = e.at("scene_id").get<std::string>();
      entry.cond_id = e.at("cond_id").get<int>();
      if (e.contains("cubemap_dir")) entry.cubemap_dir = e["cubemap_dir"].get<std::string>();
      if (e.contains("erp_path")) entry.erp_path = e["erp_path"].get<std::string>();
      if (entry.cubemap_dir.has_value() == entry.erp_path.has_value())
        throw ConfigError("entry '" + entry.scene_id + "' needs exactly one of cubemap_dir or erp_path");
      if (!ids.insert(entry.scene_id).second) throw ConfigError("duplicate scene_id '" + entry.scene_id + "'");
      const auto rel = entry.cubemap_dir ? *entry.cubemap_dir : *entry.erp_path;
      if (!std::filesystem::exists(base / rel))
        throw IoError("manifest entry '" + entry.scene_id + "' references missing path '" + (base / rel).string() + "'");
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest '" + path.string() + "': " + e.what());
  }
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json j;
  j["seed"] = manifest.seed;
  j["generator_version"] = manifest.generator_version;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json je{{"scene_id", e.scene_id}, {"cond_id", e.cond_id}};
    if (e.cubemap_dir) je["cubemap_dir"] = *e.cubemap_dir;
    if (e.erp_path) je["erp_path"] = *e.erp_path;
    j["entries"].push_back(std::move(je));
  }
  std::ofstream f(path);
  if (!f) throw IoError("cannot write manifest '" + path.string() + "'");
  f << j.dump(2) << "\n";
}

}  // namespace pano
