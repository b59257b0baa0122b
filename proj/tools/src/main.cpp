#include <chrono>
#include <iostream>

#include "CLI11.hpp"
#include "hjlab/error.hpp"
#include "hjlab/parallel.hpp"
#include "run.hpp"

using namespace hjlab::cli;

int main(int argc, char** argv) {
  CLI::App app{"Hamilton-Jacobi homogenization lab"};
  app.require_subcommand(1);
  Run run;
  std::string out;
  app.add_option("--config", run.config_path, "Config file")->required();
  app.add_option("--out", out, "Output directory (overrides [output] dir)");
  app.add_option("--threads", run.threads, "Worker threads")->check(CLI::Range(1, 1024));
  app.add_option("--seed", run.seed, "Reserved; every algorithm is deterministic");

  auto* legendre = app.add_subcommand("legendre", "Legendre dual table and solver constants");
  auto* effh = app.add_subcommand("effective-h", "Effective Hamiltonian by both cell methods");
  auto* homog = app.add_subcommand("homogenize", "Convergence experiment against the homogenized solution");
  auto* verify = app.add_subcommand("verify", "Viscosity-solution probes");
  verify->require_subcommand(1);
  std::string probe;
  for (const char* name : {"audit", "doubling", "perturbed", "uniqueness"})
    verify->add_subcommand(name)->fallthrough()->callback([&probe, name] { probe = name; });
  for (auto* sub : {legendre, effh, homog, verify}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    run.config = Config::load(run.config_path, schema());
    run.out_dir = !out.empty() ? out : run.config.string("output", "dir", "out");
    hjlab::set_thread_count(run.threads);
    bool pass = false;
    if (legendre->parsed()) {
      run.command = "legendre";
      pass = run_legendre(run);
    } else if (effh->parsed()) {
      run.command = "effective-h";
      pass = run_effective_h(run);
    } else if (homog->parsed()) {
      run.command = "homogenize";
      pass = run_homogenize(run);
    } else {
      run.command = "verify " + probe;
      pass = run_verify(run, probe);
    }
    run.say(pass ? "PASS" : "FAIL");
    run.write("summary.txt", run.summary);
    run.write_manifest(pass, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return pass ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const PhaseError& e) {
    std::cerr << (e.config_error() ? "config error: " : "error: ") << e.what() << "\n";
    return e.config_error() ? 2 : 1;
  } catch (const hjlab::Error& e) {
    const bool cfg = e.code() == hjlab::ErrorCode::InvalidArgument || e.code() == hjlab::ErrorCode::ParseError;
    std::cerr << (cfg ? "config error: " : "error: ") << e.what() << "\n";
    return cfg ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
