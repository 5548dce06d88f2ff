#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace memhacl {

std::string memhacl_version();
std::string current_timestamp_utc();

// Append-only JSON-lines sink; one record per line, flushed immediately.
class TelemetryWriter {
 public:
  explicit TelemetryWriter(const std::filesystem::path& path);
  void record(const nlohmann::json& entry);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct RunManifest {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version = memhacl_version();
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> artifacts;  // paths relative to the run directory

  void write(const std::filesystem::path& run_dir) const;
  static RunManifest read(const std::filesystem::path& run_dir);
};

}  // namespace memhacl
