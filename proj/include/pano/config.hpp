#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pano/blend.hpp"
#include "pano/flow.hpp"
#include "pano/network.hpp"
#include "pano/seams.hpp"

namespace pano {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  int sample_steps = 50;
  BlendConfig blend;
  SeamParams seams;

  void validate() const;
};

// `key = value` lines; '#' starts a comment. Unknown or repeated keys and
// values that fail validation raise ConfigError with the line number.
RunConfig parse_config(std::string_view text);
RunConfig read_config(const std::filesystem::path& path);

// Model keys only, in a form parse_config accepts.
std::string model_config_text(const ModelConfig& m);

std::vector<std::string> config_keys();

struct ManifestEntry {
  std::string scene_id;
  std::optional<std::string> cubemap_dir;
  std::optional<std::string> erp_path;
  int cond_id = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
  std::string generator_version;
};

// Paths in the manifest are resolved relative to its directory.
DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace pano
