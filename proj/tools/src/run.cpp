#include "run.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hjlab/error.hpp"
#include "hjlab/version.hpp"

namespace hjlab::cli {

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void Run::phase(const std::string& name, const std::function<void()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body();
  } catch (const Error& e) {
    const bool cfg = e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::ParseError;
    throw PhaseError(name + ": " + e.what(), cfg);
  }
  phases.emplace_back(name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

void Run::write(const std::string& name, const std::string& content) {
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / name;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << content;
  artifacts.push_back(name);
}

void Run::say(const std::string& line) {
  std::cout << line << "\n";
  summary += line;
  summary += "\n";
}

void Run::write_manifest(bool pass, double total_seconds) const {
  nlohmann::json m;
  m["command"] = command;
  m["config"] = config_path;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(config.text())));
  m["config_hash"] = std::string("fnv1a64:") + hash;
  m["config_text"] = config.text();
  m["versions"] = {{"hjlab", version()}, {"eigen", eigen_version()}, {"compiler", compiler_version()}};
  m["threads"] = threads;
  m["seed"] = seed;
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [name, s] : phases) w[name] = s;
  w["total"] = total_seconds;
  m["wall_seconds"] = w;
  m["artifacts"] = artifacts;
  m["checks"] = checks;
  m["status"] = pass ? "PASS" : "FAIL";
  std::filesystem::create_directories(out_dir);
  std::ofstream f(std::filesystem::path(out_dir) / "manifest.json");
  f << m.dump(2) << "\n";
}

const Config::Schema& schema() {
  static const Config::Schema s = {
      {"model", {"kind", "dim", "V", "xi1", "xi2", "xi3", "xi4", "H", "truncation_r0", "tol_convex"}},
      {"forms", {"form1", "form2", "form3", "form4"}},
      {"solver",
       {"x_res", "v_max", "v_res", "p_max", "p_res", "tol_legendre", "K", "cell_res", "dt_ratio", "tol_lip",
        "tol_spread", "tol_mono"}},
      {"experiment", {"f", "K_lip", "eps_list", "T", "K_lo", "K_hi", "obs_times", "hopf_lax_dv"}},
      {"effective",
       {"method", "P_lo", "P_hi", "P_res", "cell_res", "dt", "T", "tol_hbar", "tol_cell", "harmonics", "x_res",
        "tol_opt", "max_sweeps", "tol_xmethod", "v_lo", "v_hi", "v_res", "tol_convex"}},
      {"verify",
       {"eps", "T", "g", "audit_p_res", "audit_p_span", "audit_mu", "audit_rho", "tol_visc", "audit_stride",
        "deltas", "lambda", "omega_lo", "omega_hi", "t_lo", "t_hi", "min_exponent", "P", "theta", "mu", "radius",
        "y0", "eps_list", "tol_kink", "threshold", "unique_cell_res", "stability_ratio"}},
      {"output", {"dir", "fields"}},
  };
  return s;
}

}  // namespace hjlab::cli
