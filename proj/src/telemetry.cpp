#include "memhacl/telemetry.hpp"

#include <chrono>
#include <ctime>

namespace memhacl {

#ifndef MEMHACL_GIT_DESCRIBE
#define MEMHACL_GIT_DESCRIBE "unversioned"
#endif

std::string memhacl_version() { return MEMHACL_GIT_DESCRIBE; }

std::string current_timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TelemetryWriter::TelemetryWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::app) {
  if (!out_) {
    throw std::runtime_error("cannot open telemetry file " + path.string());
  }
}

void TelemetryWriter::record(const nlohmann::json& entry) {
  out_ << entry.dump() << "\n";
  out_.flush();
}

void RunManifest::write(const std::filesystem::path& run_dir) const {
  nlohmann::json j{{"config", config},
                   {"seed", seed},
                   {"version", version},
                   {"started_at", started_at},
                   {"finished_at", finished_at},
                   {"artifacts", artifacts}};
  std::ofstream out(run_dir / "manifest.json");
  if (!out) {
    throw std::runtime_error("cannot write manifest in " + run_dir.string());
  }
  out << j.dump(2) << "\n";
}

RunManifest RunManifest::read(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) {
    throw std::runtime_error("no manifest in " + run_dir.string());
  }
  nlohmann::json j;
  in >> j;
  RunManifest m;
  m.config = j.at("config");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.started_at = j.at("started_at").get<std::string>();
  m.finished_at = j.at("finished_at").get<std::string>();
  m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  return m;
}

}  // namespace memhacl
