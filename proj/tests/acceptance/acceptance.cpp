// Runs every acceptance criterion at its stated tolerance and prints one
// PASS/FAIL line each. Exit status is the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hjlab/cover.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/expression.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/homogenize.hpp"
#include "hjlab/lax_oleinik.hpp"
#include "hjlab/parallel.hpp"
#include "hjlab/verify.hpp"
#include "oracles.hpp"

using namespace hjlab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char b[160];
  std::snprintf(b, sizeof b, f, a);
  return b;
}

/// Runs `body`, turning any exception into a FAIL line.
void criterion(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

HamiltonianModel free_model() {
  return HamiltonianModel::mechanical(1, [](std::span<const double>) { return 0.0; });
}

HamiltonianModel pendulum() {
  return HamiltonianModel::mechanical(1, [](std::span<const double> x) { return std::cos(kTwoPi * x[0]); });
}

LagrangianTable table_for(const HamiltonianModel& m, int x_res) {
  return legendre_dual(m, x_res, 28.0, 561, PSearch{40.0, 801, 1e-9});
}

double datum(std::span<const double> z) { return std::cos(kPi * z[0] / 2.0); }

ExperimentSpec pendulum_experiment() {
  ExperimentSpec s;
  s.f = datum;
  s.K_lip = kPi / 2.0;
  s.eps_list = {0.25, 0.125, 0.0625, 0.03125};
  s.T = 1.0;
  s.K_lo = {-1.0};
  s.K_hi = {1.0};
  s.obs_times = {0.5, 1.0};
  s.cell_res = 64;
  s.dt_ratio = 1.0 / 16.0;
  return s;
}

EffectiveTable pendulum_effective(const HamiltonianModel& m, const LagrangianTable& t, const FormBasis& forms,
                                  int cell_res, double dt) {
  EffectiveTable et;
  et.P_grid = BoxGrid::uniform(1, -3.0, 3.0, 121);
  LongtimeConfig lc;
  lc.cell_res = cell_res;
  lc.dt = dt;
  for (std::int64_t i = 0; i < et.P_grid.size(); ++i) {
    double P;
    et.P_grid.point(i, {&P, 1});
    et.hbar.push_back(effective_longtime(m, t, {&P, 1}, forms, lc).hbar);
    et.method.push_back("longtime");
  }
  return effective_lagrangian(et, BoxGrid::uniform(1, -2.5, 2.5, 101), 5e-3);
}

std::vector<ValueField> frozen(const std::function<double(double, double)>& u, int cell_res, std::int64_t half,
                               double dt, int slices) {
  std::vector<ValueField> out;
  for (int j = 0; j < slices; ++j) {
    const double t = j * dt;
    IndexBox b{{-half}, {half}};
    out.push_back(sample_field(1.0, cell_res, b, 0.0, [&](std::span<const double> y) { return u(y[0], t); }));
    out.back().time = t;
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
  const auto start = Clock::now();
  const FormBasis forms = coordinate_forms(1);
  const HamiltonianModel fr = free_model();
  const HamiltonianModel pe = pendulum();

  // 1. Free Hamiltonian.
  criterion(1, [&] {
    const auto t0 = Clock::now();
    const LagrangianTable t = table_for(fr, 256);
    double worst_lt = 0.0, worst_is = 0.0;
    for (double P : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
      LongtimeConfig lc;
      lc.cell_res = 256;
      lc.T = 20.0;
      worst_lt = std::max(worst_lt, std::abs(effective_longtime(fr, t, {&P, 1}, forms, lc).hbar - 0.5 * P * P));
      worst_is = std::max(worst_is, std::abs(effective_infsup(fr, {&P, 1}, forms, 8).value - 0.5 * P * P));
    }
    const double sec = seconds_since(t0);
    report(1, worst_lt <= 0.02 && worst_is <= 1e-6 && sec <= 60.0,
           fmt("longtime err %.3g (<= 0.02), ", worst_lt) + fmt("infsup err %.3g (<= 1e-6), ", worst_is) +
               fmt("%.1f s (<= 60)", sec));
  });

  // 2 and 3. Pendulum flat piece, edge, hbar(2), and the cross-method gap.
  const LagrangianTable pt256 = table_for(pe, 256);
  criterion(2, [&] {
    LongtimeConfig lc;
    const auto hbar = [&](double P) { return effective_longtime(pe, pt256, {&P, 1}, forms, lc).hbar; };
    double flat = 0.0;
    for (double P : {0.0, 0.5, 1.0, 1.2}) flat = std::max(flat, std::abs(hbar(P) - 1.0));
    // Smallest P at which the long-time value leaves the flat piece.
    const double eta = 1e-4;
    double lo = 1.0, hi = 1.6;
    while (hi - lo > 1e-3) {
      const double mid = 0.5 * (lo + hi);
      (hbar(mid) > 1.0 + eta ? hi : lo) = mid;
    }
    const double edge = 0.5 * (lo + hi);
    const double h2 = hbar(2.0), q2 = oracle::pendulum_hbar(2.0);
    report(2, flat <= 0.02 && std::abs(edge - 4.0 / kPi) <= 0.05 && std::abs(h2 - q2) <= 0.03,
           fmt("flat |hbar-1| %.3g (<= 0.02), ", flat) + fmt("edge %.4f ", edge) +
               fmt("vs 4/pi %.4f (<= 0.05), ", 4.0 / kPi) + fmt("hbar(2) %.4f ", h2) +
               fmt("vs quadrature %.4f (<= 0.03)", q2));
  });

  criterion(3, [&] {
    LongtimeConfig lc;
    double gap = 0.0;
    for (double P : {0.0, 0.5, 1.0, 1.2, 2.0}) {
      const double a = effective_longtime(pe, pt256, {&P, 1}, forms, lc).hbar;
      const double b = effective_infsup(pe, {&P, 1}, forms, 8).value;
      gap = std::max(gap, std::abs(a - b));
    }
    report(3, gap <= 0.03, fmt("max |longtime - infsup| %.3g (<= 0.03)", gap));
  });

  // 4 and 5. Homogenization convergence and equi-Lipschitz constants.
  const ExperimentSpec spec = pendulum_experiment();
  const LagrangianTable pt64 = table_for(pe, 64);
  const SolverConstants pc = derive_constants(pe, pt64, spec.K_lip);
  ConvergenceReport rep;
  criterion(4, [&] {
    const auto t0 = Clock::now();
    const EffectiveTable et = pendulum_effective(pe, pt64, forms, spec.cell_res, spec.dt_ratio);
    rep = convergence_report(spec, pt64, forms, et, pc);
    const double sec = seconds_since(t0);
    std::string errs;
    bool nonincreasing = true;
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      errs += fmt(i ? ", %.4f" : "%.4f", rep.rows[i].error);
      if (i > 0 && rep.rows[i].error > rep.rows[i - 1].error) nonincreasing = false;
    }
    const bool halved = rep.rows.back().error <= 0.5 * rep.rows.front().error;
    report(4, nonincreasing && halved && sec <= 600.0,
           "errors " + errs + (nonincreasing ? " non-increasing" : " NOT non-increasing") +
               (halved ? ", last <= first/2, " : ", last > first/2, ") + fmt("%.1f s (<= 600)", sec));
  });

  criterion(5, [&] {
    if (rep.rows.empty()) throw std::runtime_error("criterion 4 produced no rows");
    double smin = INFINITY, smax = 0.0, tmin = INFINITY, tmax = 0.0;
    for (const auto& r : rep.rows) {
      smin = std::min(smin, r.space_lip);
      smax = std::max(smax, r.space_lip);
      tmin = std::min(tmin, r.time_lip);
      tmax = std::max(tmax, r.time_lip);
    }
    const double ss = smax / smin - 1.0, ts = tmax / tmin - 1.0;
    const bool pass = ss <= 0.15 && ts <= 0.15 && smax <= 1.1 * pc.b2 && tmax <= 1.1 * pc.c1;
    report(5, pass,
           fmt("space %.4f ", smax) + fmt("(spread %.2e, ", ss) + fmt("b2 %.4g), ", pc.b2) + fmt("time %.4f ", tmax) +
               fmt("(spread %.2e, ", ts) + fmt("c1 %.4g)", pc.c1));
  });

  // 6. Semigroup exactness.
  criterion(6, [&] {
    const double eps = 0.25;
    const StepConfig cfg = make_step_config(pc, eps, spec.cell_res, spec.dt_ratio * eps);
    const ValueField f0 = initial_field(spec.f, spec.K_lo, spec.K_hi, spec.T, cfg, spec.cell_res, forms);
    const auto full = solve(f0, spec.T, cfg, pt64);
    const auto half = solve(f0, spec.T / 2, cfg, pt64);
    const auto rest = solve(half.back(), spec.T / 2, cfg, pt64);
    const ValueField& a = full.back();
    const ValueField& b = rest.back();
    const IndexBox common = intersect(a.box, b.box);
    std::int64_t mismatches = 0;
    std::int64_t idx[1];
    for (std::int64_t i = 0; i < common.size(); ++i) {
      common.unflat(i, {idx, 1});
      if (a.at({idx, 1}) != b.at({idx, 1})) ++mismatches;
    }
    report(6, mismatches == 0 && common.size() > 0,
           std::to_string(mismatches) + " differing values over " + std::to_string(common.size()) + " shared points");
  });

  // 7. Ordering under 200 random ordered pairs.
  criterion(7, [&] {
    std::mt19937 rng(20241017);
    std::int64_t checked = 0, violations = 0;
    for (int k = 0; k < 200; ++k) {
      double lf = 0.0, lg = 0.0;
      const Expression f = Expression::parse(oracle::random_datum(rng, 0.25, lf), 1);
      const Expression g = Expression::parse(oracle::random_nonnegative(rng, 0.25, lg), 1);
      const SolverConstants c = derive_constants(pe, pt64, lf + lg);
      const ScalarField ff = [f](std::span<const double> z) { return f(z); };
      const ScalarField fg = [f, g](std::span<const double> z) { return f(z) + g(z); };
      const auto lo = solve_on_box(ff, Vec{-0.5}, Vec{0.5}, 0.25, 0.25, 16, 1.0 / 64.0, pt64, forms, c);
      const auto hi = solve_on_box(fg, Vec{-0.5}, Vec{0.5}, 0.25, 0.25, 16, 1.0 / 64.0, pt64, forms, c);
      double mn = INFINITY, mx = -INFINITY;
      ordering_check(lo, hi, checked, violations, mn, mx);
    }
    report(7, violations == 0,
           std::to_string(violations) + " violations over " + std::to_string(checked) + " comparisons, 200 pairs");
  });

  // 8. Doubling diagnostic.
  criterion(8, [&] {
    const double eps = 0.25;
    const double dt = spec.dt_ratio * eps;
    const ScalarField g = [](std::span<const double> z) { return datum(z) + 0.2 + 0.1 * std::sin(3.0 * z[0]); };
    const auto u = solve_on_box(spec.f, spec.K_lo, spec.K_hi, 1.0, eps, spec.cell_res, dt, pt64, forms, pc);
    const auto v = solve_on_box(g, spec.K_lo, spec.K_hi, 1.0, eps, spec.cell_res, dt, pt64, forms, pc);
    DoublingConfig dc;
    dc.omega_lo = {-0.5};
    dc.omega_hi = {0.5};
    dc.t_hi = 1.0;
    dc.boundary_width = static_cast<int>(
        LaxOperator(make_step_config(pc, eps, spec.cell_res, dt), pt64, spec.cell_res, 1).stencil_radius());
    const DoublingReport r = doubling_probe(u, v, dc);
    report(8, r.exponent >= 0.4,
           fmt("gap exponent %.3f (>= 0.4), ", r.exponent) + fmt("Q1 %.3f, ", r.q1) +
               (r.comparison_pass ? "boundary comparison holds" : "boundary comparison fails"));
  });

  // 9. Audit polarity on the |x| fixture and zero violations on smooth fixtures.
  criterion(9, [&] {
    AuditConfig ac;
    const HamiltonianModel eik = HamiltonianModel::custom(
        1, [](std::span<const double>, std::span<const double> p) { return 0.5 * p[0] * p[0] - 0.5; });
    const auto kink = frozen([](double y, double) { return std::abs(y); }, 100, 50, 0.01, 5);
    const AuditReport ksub = subsolution_audit(kink, eik, 1.0, ac);
    const AuditReport ksup = supersolution_audit(kink, eik, 1.0, ac);
    const bool polarity = ksub.pass() && !ksup.pass();

    std::int64_t smooth_violations = 0;
    int fixtures = 0;
    const auto both = [&](std::span<const ValueField> u, const HamiltonianModel& m, double eps, const AuditConfig& c) {
      smooth_violations += subsolution_audit(u, m, eps, c).violations;
      smooth_violations += supersolution_audit(u, m, eps, c).violations;
      ++fixtures;
    };
    // Exact classical solutions of u_t + p^2/2 = 0.
    both(frozen([](double y, double t) { return 0.7 * y - 0.245 * t; }, 256, 256, 1.0 / 256, 6), fr, 1.0, ac);
    both(frozen([](double y, double t) { return y * y / (2.0 * (1.0 + t)); }, 256, 256, 1.0 / 256, 6), fr, 1.0, ac);
    // Rotational invariant torus of the pendulum: u = w(x) - 2t with w' = sqrt(2(2 - cos 2 pi x)).
    {
      const int res = 256;
      std::vector<double> w(2 * res + 1);
      const auto wp = [](double x) { return std::sqrt(2.0 * (2.0 - std::cos(2.0 * kPi * x))); };
      for (int k = -res; k <= res; ++k) {
        const double x = static_cast<double>(k) / res;
        w[k + res] = oracle::integrate(wp, 0.0, x, 64);
      }
      std::vector<ValueField> u;
      for (int j = 0; j < 6; ++j) {
        ValueField f;
        f.eps = 1.0;
        f.cell_res = res;
        f.box = IndexBox{{-res}, {res}};
        f.time = j / 256.0;
        for (double v : w) f.values.push_back(v - 2.0 * f.time);
        u.push_back(std::move(f));
      }
      both(u, pe, 1.0, ac);
    }
    // Solver output for V = 0 and smooth data.
    {
      const LagrangianTable ft = table_for(fr, 8);
      const SolverConstants fc = derive_constants(fr, ft, 1.0);
      const ScalarField f = [](std::span<const double> z) { return 0.3 * std::sin(z[0]); };
      both(solve_on_box(f, Vec{-1}, Vec{1}, 0.5, 0.25, 64, 0.25 / 16, ft, forms, fc), fr, 0.25, ac);
    }
    // Pendulum solver output at a step fine enough for pointwise checks.
    {
      const LagrangianTable t = table_for(pe, 1024);
      AuditConfig c = ac;
      c.stride = 4;
      both(solve_on_box(spec.f, Vec{-0.5}, Vec{0.5}, 0.25, 1.0, 1024, 1.0 / 256, t, forms, pc), pe, 1.0, c);
    }
    report(9, polarity && smooth_violations == 0,
           "|x| fixture: sub " + std::to_string(ksub.violations) + " / sup " + std::to_string(ksup.violations) +
               " violations; " + std::to_string(fixtures) + " smooth fixtures: " +
               std::to_string(smooth_violations) + " violations");
  });

  // 10. Perturbed test function probe.
  criterion(10, [&] {
    const double P = 0.0;
    const LongtimeResult lr = effective_longtime(pe, pt256, {&P, 1}, forms, LongtimeConfig{});
    TestFunctionBundle b;
    b.y0 = {0.0};
    b.P = {P};
    const std::vector<double> eps{0.125, 0.0625};
    const PerturbedReport r = perturbed_test_probe(pe, forms, lr.corrector, lr.hbar, b, 0.5, eps);
    std::string detail;
    for (const auto& row : r.rows) detail += fmt("eps %.4g: ", row.eps) + fmt("%.3f of filtered points; ", row.fraction);
    report(10, r.pass(), detail + "threshold 0.9");
  });

  // 11. Determinism of the full homogenize run across thread counts.
  criterion(11, [&] {
    const std::filesystem::path base = std::filesystem::temp_directory_path() / "hjlab_acceptance";
    std::filesystem::remove_all(base);
    for (int threads : {1, 8}) {
      const auto dir = base / ("t" + std::to_string(threads));
      const std::string cmd = std::string("\"") + HJLAB_CLI + "\" homogenize --config \"" + HJLAB_CONFIG_DIR +
                              "/homogenize_pendulum.ini\" --threads " + std::to_string(threads) + " --out \"" +
                              dir.string() + "\" > \"" + (base / ("log" + std::to_string(threads))).string() +
                              "\" 2>&1";
      std::filesystem::create_directories(base);
      const int rc = std::system(cmd.c_str());
      if (rc != 0) throw std::runtime_error("homogenize run with --threads " + std::to_string(threads) + " failed");
    }
    int compared = 0, differ = 0;
    for (const auto& e : std::filesystem::directory_iterator(base / "t1")) {
      const auto name = e.path().filename().string();
      const auto ext = e.path().extension().string();
      if (ext != ".csv" && ext != ".dat") continue;
      ++compared;
      if (slurp(e.path()) != slurp(base / "t8" / name)) ++differ;
    }
    report(11, compared >= 5 && differ == 0,
           std::to_string(compared) + " CSV artifacts compared, " + std::to_string(differ) + " differ");
  });

  std::printf("acceptance: %d failing criteria, %.1f s\n", failures, seconds_since(start));
  return failures == 0 ? 0 : 1;
}
