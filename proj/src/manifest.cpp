#include "graphtext/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

#include "graphtext/digest.hpp"
#include "graphtext/errors.hpp"

namespace graphtext {

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void RunManifest::add_input(const std::filesystem::path& path) {
  input_digests[path.string()] = sha256_file(path);
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json doc{{"command", command},
                     {"config", config},
                     {"inputs", input_digests},
                     {"outputs", outputs},
                     {"counters", counters},
                     {"wall_time_s", wall_time_s},
                     {"timestamp", timestamp}};
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open manifest for writing: " + path.string());
  }
  out << doc.dump(2) << '\n';
}

RunManifest RunManifest::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open manifest: " + path.string());
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw FormatError("manifest is not valid JSON: " + path.string());
  }
  RunManifest manifest;
  try {
    manifest.command = doc.at("command").get<std::string>();
    manifest.config = doc.at("config");
    manifest.input_digests =
        doc.at("inputs").get<std::map<std::string, std::string>>();
    manifest.outputs = doc.at("outputs").get<std::vector<std::string>>();
    manifest.counters =
        doc.at("counters").get<std::map<std::string, std::int64_t>>();
    manifest.wall_time_s = doc.at("wall_time_s").get<double>();
    manifest.timestamp = doc.at("timestamp").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + path.string() + ": " + e.what());
  }
  return manifest;
}

}  // namespace graphtext
