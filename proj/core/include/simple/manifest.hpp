#pragma once

#include <string>

#include "simple/config.hpp"

namespace simple {

// Run directory descriptor: the resolved config plus enough metadata to
// reproduce the run. serialize/parse round-trip losslessly.
struct RunManifest {
  TrainConfig config;
  std::string tool_version;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // empty while the run is in flight
  // Artifact paths, relative to the directory holding the manifest.
  std::string metrics_csv = "metrics.csv";
  std::string checkpoint_dir = "checkpoints";
};

std::string serialize_manifest(const RunManifest& m);
// Throws ConfigError on malformed JSON, unknown config keys, or a stored
// digest that does not match the embedded config.
RunManifest parse_manifest_json(const std::string& json_text);

void save_manifest(const std::string& path, const RunManifest& m);
RunManifest load_manifest_file(const std::string& path);

}  // namespace simple
