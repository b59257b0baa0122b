#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"

namespace hjlab::cli {

/// Per-invocation state: options, the output directory, phase timings and
/// the manifest under construction.
struct Run {
  std::string command;
  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  std::uint64_t seed = 0;
  Config config;
  nlohmann::json checks = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> phases;
  std::vector<std::string> artifacts;
  std::string summary;

  /// Runs `body`, records its wall time, and prefixes numerical errors with `name`.
  void phase(const std::string& name, const std::function<void()>& body);

  /// Writes `content` to out_dir/name and records it as an artifact.
  void write(const std::string& name, const std::string& content);
  void say(const std::string& line);

  void write_manifest(bool pass, double total_seconds) const;
};

/// Error from an inner module, re-thrown with the phase that raised it.
class PhaseError : public std::runtime_error {
 public:
  PhaseError(const std::string& what, bool config) : std::runtime_error(what), config_(config) {}
  bool config_error() const { return config_; }

 private:
  bool config_;
};

std::uint64_t fnv1a64(const std::string& bytes);

/// The schema of every section and key the tool understands.
const Config::Schema& schema();

bool run_legendre(Run& run);
bool run_effective_h(Run& run);
bool run_homogenize(Run& run);
bool run_verify(Run& run, const std::string& probe);

}  // namespace hjlab::cli
