#include "simple/manifest.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "simple/errors.hpp"

namespace simple {

using nlohmann::json;

std::string serialize_manifest(const RunManifest& m) {
  json j;
  j["tool_version"] = m.tool_version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["config"] = json::parse(serialize_config(m.config));
  j["config_digest"] = config_digest(m.config);
  j["layout"]["metrics_csv"] = m.metrics_csv;
  j["layout"]["checkpoint_dir"] = m.checkpoint_dir;
  return j.dump(2);
}

RunManifest parse_manifest_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("manifest root must be a JSON object");
  RunManifest m;
  auto str = [&](const json& o, const char* key, std::string& dst) {
    if (!o.contains(key) || !o.at(key).is_string()) {
      throw ConfigError(std::string("manifest missing string field \"") + key +
                        "\"");
    }
    dst = o.at(key).get<std::string>();
  };
  str(j, "tool_version", m.tool_version);
  str(j, "started_at", m.started_at);
  str(j, "finished_at", m.finished_at);
  if (!j.contains("config")) throw ConfigError("manifest missing config");
  m.config = parse_config_json(j.at("config").dump());
  if (j.contains("config_digest")) {
    const auto stored = j.at("config_digest").get<std::uint64_t>();
    if (stored != config_digest(m.config)) {
      throw ConfigError("manifest digest does not match its embedded config");
    }
  }
  if (!j.contains("layout")) throw ConfigError("manifest missing layout");
  str(j.at("layout"), "metrics_csv", m.metrics_csv);
  str(j.at("layout"), "checkpoint_dir", m.checkpoint_dir);
  return m;
}

void save_manifest(const std::string& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << serialize_manifest(m) << "\n";
  out.flush();
  if (!out) throw IoError("manifest write failed: " + path);
}

RunManifest load_manifest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest_json(ss.str());
}

}  // namespace simple
