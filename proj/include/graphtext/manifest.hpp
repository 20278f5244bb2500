#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace graphtext {

/// One manifest per pipeline run: config snapshot, input digests for exact
/// re-run detection, output paths, wall time, and audit counters. Manifests
/// are the only outputs allowed to carry timestamps.
struct RunManifest {
  std::string command;
  nlohmann::json config = nlohmann::json::object();
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  std::map<std::string, std::int64_t> counters;
  double wall_time_s = 0.0;
  std::string timestamp;  // UTC, ISO-8601

  void add_input(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
  static RunManifest read(const std::filesystem::path& path);
};

/// Current UTC instant as ISO-8601.
std::string utc_now_iso8601();

}  // namespace graphtext
