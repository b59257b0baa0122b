#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "hjlab/cover.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/error.hpp"
#include "hjlab/expression.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/homogenize.hpp"
#include "hjlab/lax_oleinik.hpp"
#include "hjlab/verify.hpp"
#include "run.hpp"

namespace hjlab::cli {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Expression expression(const Config& c, const std::string& sec, const std::string& key, int dim,
                      bool momentum = false) {
  try {
    return Expression::parse(c.string(sec, key), dim, momentum);
  } catch (const Error& e) {
    c.fail(sec, key, e.what());
  }
}

ScalarField field(const Expression& e) {
  return [e](std::span<const double> x) { return e(x); };
}

void positive(const Config& c, const std::string& sec, const std::string& key, double v) {
  if (!(v > 0.0)) c.fail(sec, key, "must be positive");
}

int model_dim(const Config& c) {
  const int n = c.integer("model", "dim", 1);
  if (n < 1 || n > kMaxDim) c.fail("model", "dim", "must be between 1 and " + std::to_string(kMaxDim));
  return n;
}

Vec per_axis(const Config& c, const std::string& sec, const std::string& key, int dim) {
  Vec v = c.numbers(sec, key);
  if (v.size() == 1) v.assign(dim, v[0]);
  if (static_cast<int>(v.size()) != dim) c.fail(sec, key, "expected 1 or " + std::to_string(dim) + " values");
  return v;
}

Vec per_axis(const Config& c, const std::string& sec, const std::string& key, int dim, double def) {
  return c.has(sec, key) ? per_axis(c, sec, key, dim) : Vec(dim, def);
}

struct Setup {
  int dim = 1;
  HamiltonianModel model;
  FormBasis forms;
  double tol_convex = 1e-8;
};

Setup setup(Run& run) {
  const Config& c = run.config;
  Setup s;
  s.dim = model_dim(c);
  const int n = s.dim;
  const std::string kind = c.string("model", "kind");
  if (kind == "mechanical") {
    if (c.has("model", "H")) c.fail("model", "H", "only allowed with kind = custom");
    const ScalarField V = field(expression(c, "model", "V", n));
    VectorField xi;
    std::vector<Expression> parts;
    for (int d = 0; d < kMaxDim; ++d) {
      const std::string key = "xi" + std::to_string(d + 1);
      if (!c.has("model", key)) continue;
      if (d >= n) c.fail("model", key, "component beyond dim");
      parts.resize(n, Expression::constant(0.0, n));
      parts[d] = expression(c, "model", key, n);
    }
    if (!parts.empty())
      xi = [parts](std::span<const double> x, std::span<double> out) {
        for (std::size_t d = 0; d < parts.size(); ++d) out[d] = parts[d](x);
      };
    s.model = HamiltonianModel::mechanical(n, V, xi);
  } else if (kind == "custom") {
    if (c.has("model", "V")) c.fail("model", "V", "only allowed with kind = mechanical");
    const Expression H = expression(c, "model", "H", n, true);
    s.model = HamiltonianModel::custom(
        n, [H](std::span<const double> x, std::span<const double> p) { return H(x, p); });
  } else {
    c.fail("model", "kind", "expected mechanical or custom, got `" + kind + "`");
  }
  s.tol_convex = c.number("model", "tol_convex", 1e-8);
  positive(c, "model", "tol_convex", s.tol_convex);
  if (c.has("model", "truncation_r0")) {
    const double r0 = c.number("model", "truncation_r0");
    positive(c, "model", "truncation_r0", r0);
    run.phase("truncation", [&] { s.model = quadratic_truncation(s.model, r0, s.tol_convex); });
  }

  bool any = false;
  for (int i = 0; i < kMaxDim; ++i) any = any || c.has("forms", "form" + std::to_string(i + 1));
  if (!any) {
    s.forms = coordinate_forms(n);
  } else {
    for (int i = 0; i < n; ++i) {
      const std::string key = "form" + std::to_string(i + 1);
      const std::string text = c.string("forms", key);
      const auto bar = text.find('|');
      ClosedOneForm w;
      std::istringstream in(text.substr(0, bar));
      std::string item;
      while (std::getline(in, item, ',')) {
        try {
          const Expression e = Expression::parse(item, 1);
          if (!e.is_constant()) c.fail("forms", key, "constant part must be numbers");
          const double zero = 0.0;
          w.constant.push_back(e({&zero, 1}));
        } catch (const Error& e) {
          c.fail("forms", key, e.what());
        }
      }
      if (w.dim() != n) c.fail("forms", key, "constant part needs " + std::to_string(n) + " components");
      if (bar != std::string::npos) {
        try {
          w.potential = field(Expression::parse(text.substr(bar + 1), n));
        } catch (const Error& e) {
          c.fail("forms", key, e.what());
        }
      }
      s.forms.push_back(std::move(w));
    }
    for (int i = n; i < kMaxDim; ++i)
      if (c.has("forms", "form" + std::to_string(i + 1)))
        c.fail("forms", "form" + std::to_string(i + 1), "more forms than dim");
  }
  return s;
}

LagrangianTable table(Run& run, const Setup& s, int default_x_res) {
  const Config& c = run.config;
  const int x_res = c.integer("solver", "x_res", default_x_res);
  const double v_max = c.number("solver", "v_max", 28.0);
  const int v_res = c.integer("solver", "v_res", 561);
  PSearch ps;
  ps.p_max = c.number("solver", "p_max", 40.0);
  ps.p_res = c.integer("solver", "p_res", 801);
  ps.tol = c.number("solver", "tol_legendre", 1e-9);
  if (x_res < 1) c.fail("solver", "x_res", "must be at least 1");
  if (v_res < 3 || v_res % 2 == 0) c.fail("solver", "v_res", "must be odd and at least 3");
  positive(c, "solver", "v_max", v_max);
  positive(c, "solver", "p_max", ps.p_max);
  positive(c, "solver", "tol_legendre", ps.tol);
  if (ps.p_res < 3) c.fail("solver", "p_res", "must be at least 3");
  LagrangianTable t;
  run.phase("legendre", [&] { t = legendre_dual(s.model, x_res, v_max, v_res, ps); });
  return t;
}

/// Lipschitz constant of the datum: [solver] K if given, else the symbolic bound of f.
double datum_lipschitz(const Config& c, const Expression* f) {
  if (c.has("solver", "K")) {
    const double K = c.number("solver", "K");
    if (!(K >= 0.0)) c.fail("solver", "K", "must be non-negative");
    return K;
  }
  if (!f) return 1.0;
  const auto b = f->lipschitz_bound();
  if (!b) c.fail("experiment", "f", "no symbolic Lipschitz bound for this expression; set [solver] K");
  return *b;
}

std::string constants_csv(const SolverConstants& k) {
  std::string s = "name,value\n";
  const std::pair<const char*, double> rows[] = {{"K", k.K},   {"A", k.A},   {"B", k.B},   {"a1", k.a1},
                                                 {"k0", k.k0}, {"a0", k.a0}, {"b2", k.b2}, {"c2", k.c2},
                                                 {"c1", k.c1}, {"Q", k.Q}};
  for (const auto& [n, v] : rows) s += std::string(n) + "," + num(v) + "\n";
  return s;
}

struct Experiment {
  Expression f;
  ExperimentSpec spec;
};

Experiment experiment(const Config& c, int n) {
  Experiment e;
  e.f = expression(c, "experiment", "f", n);
  auto& s = e.spec;
  s.dim = n;
  s.f = field(e.f);
  s.K_lip = datum_lipschitz(c, &e.f);
  s.eps_list = c.numbers("experiment", "eps_list");
  s.T = c.number("experiment", "T");
  s.K_lo = per_axis(c, "experiment", "K_lo", n);
  s.K_hi = per_axis(c, "experiment", "K_hi", n);
  s.obs_times = c.numbers("experiment", "obs_times");
  s.hopf_lax_dv = c.number("experiment", "hopf_lax_dv", s.hopf_lax_dv);
  s.cell_res = c.integer("solver", "cell_res", s.cell_res);
  s.dt_ratio = c.number("solver", "dt_ratio", s.dt_ratio);
  s.tol_lip = c.number("solver", "tol_lip", s.tol_lip);
  s.tol_spread = c.number("solver", "tol_spread", s.tol_spread);
  s.tol_mono = c.number("solver", "tol_mono", s.tol_mono);
  try {
    validate(s);
  } catch (const Error& err) {
    throw ConfigError(c.source() + ": [experiment] " + err.what());
  }
  return e;
}

BoxGrid p_grid(const Config& c, int n) {
  BoxGrid g;
  g.dim = n;
  g.lo = per_axis(c, "effective", "P_lo", n);
  g.hi = per_axis(c, "effective", "P_hi", n);
  g.res = c.integer("effective", "P_res", 0);
  if (!c.has("effective", "P_res")) c.string("effective", "P_res");  // names the missing key
  if (g.res < 1) c.fail("effective", "P_res", "must be at least 1");
  for (int d = 0; d < n; ++d)
    if (g.res > 1 && !(g.hi[d] > g.lo[d])) c.fail("effective", "P_hi", "must exceed P_lo");
  return g;
}

LongtimeConfig longtime_config(const Config& c) {
  LongtimeConfig lc;
  lc.cell_res = c.integer("effective", "cell_res", lc.cell_res);
  lc.dt = c.number("effective", "dt", lc.dt);
  lc.T = c.number("effective", "T", lc.T);
  lc.tol_hbar = c.number("effective", "tol_hbar", lc.tol_hbar);
  lc.tol_cell = c.number("effective", "tol_cell", lc.tol_cell);
  if (lc.cell_res < 2) c.fail("effective", "cell_res", "must be at least 2");
  positive(c, "effective", "dt", lc.dt);
  positive(c, "effective", "T", lc.T);
  positive(c, "effective", "tol_hbar", lc.tol_hbar);
  positive(c, "effective", "tol_cell", lc.tol_cell);
  return lc;
}

std::string field_csv(std::span<const ValueField> fields) {
  std::ostringstream o;
  write_field_csv(o, fields);
  return o.str();
}

/// Solver constants for a datum with Lipschitz constant K, recorded as an artifact.
SolverConstants constants(Run& run, const Setup& s, const LagrangianTable& t, double K) {
  SolverConstants k;
  run.phase("constants", [&] { k = derive_constants(s.model, t, K); });
  run.write("constants.csv", constants_csv(k));
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------

bool run_legendre(Run& run) {
  const Config& c = run.config;
  const Setup s = setup(run);
  const LagrangianTable t = table(run, s, 64);
  {
    std::ostringstream o;
    t.write_csv(o);
    run.write("lagrangian.csv", o.str());
  }
  std::unique_ptr<Expression> f;
  if (c.has("experiment", "f")) f = std::make_unique<Expression>(expression(c, "experiment", "f", s.dim));
  const SolverConstants k = constants(run, s, t, datum_lipschitz(c, f.get()));
  ConstantsAudit audit;
  double convex = 0.0;
  run.phase("audit", [&] {
    audit = audit_constants(k, t);
    ModelSampling ms;
    convex = convexity_violation(s.model, ms);
  });
  const bool pass = audit.ok() && convex <= s.tol_convex;
  run.checks["constants_audit"] = audit.ok();
  run.checks["convexity_violation"] = convex;
  run.say("legendre: table " + std::to_string(t.x_count()) + " x " + std::to_string(t.v_count()) +
          " points, v_max " + short_num(t.v_max()));
  run.say("constants: a0=" + short_num(k.a0) + " b2=" + short_num(k.b2) + " c1=" + short_num(k.c1) +
          " Q=" + short_num(k.Q));
  for (const auto& m : audit.failures) run.say("audit failure: " + m);
  run.say("convexity violation " + short_num(convex) + (convex <= s.tol_convex ? " (ok)" : " (FAIL)"));
  return pass;
}

bool run_effective_h(Run& run) {
  const Config& c = run.config;
  const Setup s = setup(run);
  const int n = s.dim;
  const BoxGrid grid = p_grid(c, n);
  const std::string method = c.string("effective", "method", "both");
  if (method != "both" && method != "longtime" && method != "infsup")
    c.fail("effective", "method", "expected both, longtime or infsup");
  const bool use_lt = method != "infsup", use_is = method != "longtime";
  const LongtimeConfig lc = longtime_config(c);
  InfSupConfig ic;
  ic.x_res = c.integer("effective", "x_res", ic.x_res);
  ic.tol_opt = c.number("effective", "tol_opt", ic.tol_opt);
  ic.max_sweeps = c.integer("effective", "max_sweeps", ic.max_sweeps);
  const int harmonics = c.integer("effective", "harmonics", 8);
  if (harmonics < 0) c.fail("effective", "harmonics", "must be non-negative");
  const double tol_x = c.number("effective", "tol_xmethod", 0.03);
  positive(c, "effective", "tol_xmethod", tol_x);

  LagrangianTable t;
  if (use_lt) t = table(run, s, lc.cell_res);

  std::string csv;
  for (int d = 0; d < n; ++d) csv += "P" + std::to_string(d + 1) + ",";
  csv += "hbar_longtime,hbar_infsup,gap,residual\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  double worst_gap = 0.0;
  bool stalled = false;
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    Vec P(n);
    grid.point(i, P);
    double lt = nan, is = nan, res = nan;
    if (use_lt)
      run.phase("longtime", [&] {
        const LongtimeResult r = effective_longtime(s.model, t, P, s.forms, lc);
        lt = r.hbar;
        res = r.corrector.residual;
      });
    if (use_is)
      run.phase("infsup", [&] {
        const InfSupResult r = effective_infsup(s.model, P, s.forms, harmonics, ic);
        is = r.value;
        stalled = stalled || r.stalled;
      });
    const double gap = use_lt && use_is ? std::abs(lt - is) : nan;
    if (use_lt && use_is) worst_gap = std::max(worst_gap, gap);
    for (double p : P) csv += num(p) + ",";
    csv += num(lt) + "," + num(is) + "," + num(gap) + "," + num(res) + "\n";
  }
  // The per-point phases are folded into one timing each.
  std::vector<std::pair<std::string, double>> merged;
  for (const auto& [name, sec] : run.phases) {
    auto it = std::find_if(merged.begin(), merged.end(), [&](const auto& m) { return m.first == name; });
    if (it == merged.end()) merged.emplace_back(name, sec);
    else it->second += sec;
  }
  run.phases = merged;
  run.write("effective_h.csv", csv);
  const bool pass = !(use_lt && use_is) || worst_gap <= tol_x;
  run.checks["max_gap"] = worst_gap;
  run.checks["tol_xmethod"] = tol_x;
  run.checks["infsup_stalled"] = stalled;
  run.say("effective-h: " + std::to_string(grid.size()) + " P values, method " + method);
  if (use_lt && use_is) run.say("max |longtime - infsup| = " + short_num(worst_gap) + " (tol " + short_num(tol_x) + ")");
  return pass;
}

bool run_homogenize(Run& run) {
  const Config& c = run.config;
  const Setup s = setup(run);
  const int n = s.dim;
  const Experiment ex = experiment(c, n);
  const ExperimentSpec& spec = ex.spec;
  const LagrangianTable t = table(run, s, spec.cell_res);
  const SolverConstants k = constants(run, s, t, spec.K_lip);

  // The effective table uses the fast-scale discretization of the scaled solves.
  LongtimeConfig lc = longtime_config(c);
  lc.cell_res = spec.cell_res;
  lc.dt = spec.dt_ratio;
  EffectiveTable et;
  et.P_grid = p_grid(c, n);
  run.phase("effective", [&] {
    et.hbar.resize(et.P_grid.size());
    et.method.assign(et.P_grid.size(), "longtime");
    for (std::int64_t i = 0; i < et.P_grid.size(); ++i) {
      Vec P(n);
      et.P_grid.point(i, P);
      et.hbar[i] = effective_longtime(s.model, t, P, s.forms, lc).hbar;
    }
  });
  const double tol_convex = c.number("effective", "tol_convex", 5e-3);
  positive(c, "effective", "tol_convex", tol_convex);
  BoxGrid vg;
  vg.dim = n;
  vg.res = c.integer("effective", "v_res", 101);
  if (vg.res < 2) c.fail("effective", "v_res", "must be at least 2");
  if (c.has("effective", "v_lo") || c.has("effective", "v_hi")) {
    vg.lo = per_axis(c, "effective", "v_lo", n);
    vg.hi = per_axis(c, "effective", "v_hi", n);
  } else {
    // Stay strictly inside the range whose dual argmax is interior to the P grid.
    const auto [lo, hi] = dual_velocity_range(et);
    vg.lo.assign(n, 0.95 * lo);
    vg.hi.assign(n, 0.95 * hi);
  }
  run.phase("dual", [&] { et = effective_lagrangian(et, vg, tol_convex); });
  {
    std::ostringstream h, l;
    write_hbar_csv(h, et);
    write_lbar_csv(l, et);
    run.write("hbar.csv", h.str());
    run.write("lbar.csv", l.str());
  }

  bool truncation_ok = true;
  if (s.model.truncation()) {
    // Sublevel containment at the largest effective energy reached by slopes |P| <= Q.
    double h0 = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < et.P_grid.size(); ++i) {
      Vec P(n);
      et.P_grid.point(i, P);
      if (norm2(P) <= k.Q) h0 = std::max(h0, et.hbar[i]);
    }
    const double r0 = s.model.truncation()->r0;
    ModelSampling ms;
    ms.p_max = 3.0 * r0;
    ms.p_res = 61;
    const double rad = sublevel_radius(s.model, h0, ms);
    truncation_ok = rad <= r0;
    run.checks["truncation_h0"] = h0;
    run.checks["truncation_sublevel_radius"] = rad;
  }

  ConvergenceReport rep;
  std::ostringstream log;
  run.phase("convergence", [&] { rep = convergence_report(spec, t, s.forms, et, k, &log); });
  {
    std::ostringstream r, p;
    write_report_csv(r, rep);
    write_plot_data(p, rep);
    run.write("convergence.csv", r.str());
    run.write("convergence.dat", p.str());
  }
  if (c.boolean("output", "fields", false))
    run.phase("fields", [&] {
      for (double eps : spec.eps_list) {
        const ScaledSolution sol = solve_scaled(spec, eps, t, s.forms, k);
        run.write("field_eps_" + short_num(eps) + ".csv", field_csv(sol.observed));
      }
    });

  run.checks["monotone"] = rep.monotone;
  run.checks["halved"] = rep.halved;
  run.checks["lipschitz"] = rep.lipschitz;
  run.checks["equi_lipschitz"] = rep.equi;
  run.checks["space_spread"] = rep.space_spread;
  run.checks["time_spread"] = rep.time_spread;
  run.checks["hbar_convex"] = et.convex;
  run.checks["hbar_convexity_violation"] = et.convexity_violation;
  run.checks["truncation_containment"] = truncation_ok;
  for (const auto& row : rep.rows)
    run.say("eps=" + short_num(row.eps) + " error=" + short_num(row.error) + " lip=" + short_num(row.space_lip) +
            "/" + short_num(row.time_lip));
  run.say(std::string("monotone ") + (rep.monotone ? "yes" : "no") + ", halved " + (rep.halved ? "yes" : "no") +
          ", lipschitz " + (rep.lipschitz ? "yes" : "no") + ", spread " + short_num(rep.space_spread) + "/" +
          short_num(rep.time_spread) + ", hbar convex " + (et.convex ? "yes" : "no"));
  return rep.pass && et.convex && truncation_ok;
}

// ---------------------------------------------------------------------------

namespace {

struct VerifyBase {
  Setup s;
  Experiment ex;
  LagrangianTable t;
  SolverConstants k;
  double eps = 0.25;
  double T = 1.0;
};

VerifyBase verify_base(Run& run) {
  const Config& c = run.config;
  VerifyBase b;
  b.s = setup(run);
  b.ex = experiment(c, b.s.dim);
  b.eps = c.number("verify", "eps", 0.25);
  positive(c, "verify", "eps", b.eps);
  b.T = c.number("verify", "T", b.ex.spec.T);
  positive(c, "verify", "T", b.T);
  b.t = table(run, b.s, b.ex.spec.cell_res);
  b.k = constants(run, b.s, b.t, b.ex.spec.K_lip);
  return b;
}

std::vector<ValueField> solve_datum(Run& run, const VerifyBase& b, const ScalarField& f, int cell_res) {
  const auto& sp = b.ex.spec;
  std::vector<ValueField> u;
  run.phase("solve", [&] {
    u = solve_on_box(f, sp.K_lo, sp.K_hi, b.T, b.eps, cell_res, sp.dt_ratio * b.eps, b.t, b.s.forms, b.k);
  });
  return u;
}

ScalarField shifted_datum(const Config& c, const VerifyBase& b, Expression& g) {
  g = expression(c, "verify", "g", b.s.dim);
  const Expression f = b.ex.f;
  return [f, g](std::span<const double> z) { return f(z) + g(z); };
}

std::string audit_row(const char* kind, const AuditReport& r) {
  std::string s = std::string(kind) + "," + std::to_string(r.points) + "," + std::to_string(r.touching) + "," +
                  std::to_string(r.violations) + "," + num(r.worst) + "," + num(r.worst_t);
  for (double x : r.worst_x) s += "," + num(x);
  return s + "\n";
}

}  // namespace

bool run_verify(Run& run, const std::string& probe) {
  const Config& c = run.config;
  VerifyBase b = verify_base(run);
  const int n = b.s.dim;
  const auto& sp = b.ex.spec;

  if (probe == "audit") {
    AuditConfig ac;
    ac.p_res = c.integer("verify", "audit_p_res", ac.p_res);
    ac.p_span = c.number("verify", "audit_p_span", ac.p_span);
    ac.mu = c.numbers("verify", "audit_mu", ac.mu);
    ac.rho = c.integer("verify", "audit_rho", ac.rho);
    ac.tol_visc = c.number("verify", "tol_visc", ac.tol_visc);
    ac.stride = c.integer("verify", "audit_stride", ac.stride);
    if (ac.p_res < 1) c.fail("verify", "audit_p_res", "must be at least 1");
    if (ac.rho < 1) c.fail("verify", "audit_rho", "must be at least 1");
    if (ac.stride < 1) c.fail("verify", "audit_stride", "must be at least 1");
    positive(c, "verify", "tol_visc", ac.tol_visc);
    for (double m : ac.mu) positive(c, "verify", "audit_mu", m);
    const auto u = solve_datum(run, b, sp.f, sp.cell_res);
    AuditReport sub, sup;
    run.phase("audit", [&] {
      sub = subsolution_audit(u, b.s.model, b.eps, ac);
      sup = supersolution_audit(u, b.s.model, b.eps, ac);
    });
    std::string csv = "kind,points,touching,violations,worst,worst_t";
    for (int d = 0; d < n; ++d) csv += ",worst_x" + std::to_string(d + 1);
    csv += "\n" + audit_row("subsolution", sub) + audit_row("supersolution", sup);
    run.write("audit.csv", csv);
    run.checks["subsolution_violations"] = sub.violations;
    run.checks["supersolution_violations"] = sup.violations;
    run.say("subsolution audit: " + std::to_string(sub.violations) + " violations over " +
            std::to_string(sub.points) + " points");
    run.say("supersolution audit: " + std::to_string(sup.violations) + " violations over " +
            std::to_string(sup.points) + " points");
    return sub.pass() && sup.pass();
  }

  if (probe == "doubling") {
    DoublingConfig dc;
    dc.deltas = c.numbers("verify", "deltas", dc.deltas);
    dc.lambda = c.number("verify", "lambda", dc.lambda);
    dc.omega_lo = per_axis(c, "verify", "omega_lo", n, -0.5);
    dc.omega_hi = per_axis(c, "verify", "omega_hi", n, 0.5);
    dc.t_lo = c.number("verify", "t_lo", 0.0);
    dc.t_hi = c.number("verify", "t_hi", b.T);
    dc.min_exponent = c.number("verify", "min_exponent", dc.min_exponent);
    positive(c, "verify", "lambda", dc.lambda);
    for (std::size_t i = 0; i < dc.deltas.size(); ++i) {
      positive(c, "verify", "deltas", dc.deltas[i]);
      if (i > 0 && !(dc.deltas[i] < dc.deltas[i - 1])) c.fail("verify", "deltas", "must be strictly decreasing");
    }
    Expression g;
    const ScalarField fg = shifted_datum(c, b, g);
    const auto u = solve_datum(run, b, sp.f, sp.cell_res);
    const auto v = solve_datum(run, b, fg, sp.cell_res);
    dc.boundary_width = static_cast<int>(
        LaxOperator(make_step_config(b.k, b.eps, sp.cell_res, sp.dt_ratio * b.eps), b.t, sp.cell_res, n)
            .stencil_radius());
    DoublingReport r;
    run.phase("doubling", [&] { r = doubling_probe(u, v, dc); });
    std::string csv = "delta,value,gap,t,s";
    for (int d = 0; d < n; ++d) csv += ",x" + std::to_string(d + 1);
    for (int d = 0; d < n; ++d) csv += ",y" + std::to_string(d + 1);
    csv += "\n";
    for (const auto& row : r.rows) {
      csv += num(row.delta) + "," + num(row.value) + "," + num(row.gap) + "," + num(row.t) + "," + num(row.s);
      for (double x : row.x) csv += "," + num(x);
      for (double y : row.y) csv += "," + num(y);
      csv += "\n";
    }
    run.write("doubling.csv", csv);
    run.checks["exponent"] = r.exponent;
    run.checks["q1"] = r.q1;
    run.checks["interior_max"] = r.interior_max;
    run.checks["boundary_max"] = r.boundary_max;
    run.say("doubling: gap exponent " + short_num(r.exponent) + " (min " + short_num(dc.min_exponent) +
            "), Q1 " + short_num(r.q1));
    run.say("comparison: interior max " + short_num(r.interior_max) + ", boundary max " +
            short_num(r.boundary_max));
    return r.pass();
  }

  if (probe == "perturbed") {
    TestFunctionBundle tb;
    tb.P = per_axis(c, "verify", "P", n, 0.0);
    tb.y0 = per_axis(c, "verify", "y0", n, 0.0);
    tb.mu = c.number("verify", "mu", tb.mu);
    tb.radius = c.number("verify", "radius", tb.radius);
    const double theta = c.number("verify", "theta", 0.5);
    PerturbedConfig pc;
    pc.tol_kink = c.number("verify", "tol_kink", pc.tol_kink);
    pc.threshold = c.number("verify", "threshold", pc.threshold);
    const Vec eps_list = c.numbers("verify", "eps_list", {0.125, 0.0625});
    positive(c, "verify", "theta", theta);
    positive(c, "verify", "radius", tb.radius);
    const LongtimeConfig lc = longtime_config(c);
    const LagrangianTable ct = lc.cell_res == b.t.x_res() ? b.t : table(run, b.s, lc.cell_res);
    LongtimeResult lr;
    run.phase("corrector", [&] { lr = effective_longtime(b.s.model, ct, tb.P, b.s.forms, lc); });
    PerturbedReport r;
    run.phase("perturbed", [&] {
      r = perturbed_test_probe(b.s.model, b.s.forms, lr.corrector, lr.hbar, tb, theta, eps_list, pc);
    });
    std::string csv = "eps,sampled,kinks,satisfied,fraction,min_value,pass\n";
    for (const auto& row : r.rows)
      csv += num(row.eps) + "," + std::to_string(row.sampled) + "," + std::to_string(row.kinks) + "," +
             std::to_string(row.satisfied) + "," + num(row.fraction) + "," + num(row.min_value) + "," +
             (row.pass ? "1" : "0") + "\n";
    run.write("perturbed.csv", csv);
    run.checks["hbar"] = lr.hbar;
    run.checks["corrector_residual"] = lr.corrector.residual;
    run.say("perturbed: hbar(P) " + short_num(lr.hbar) + ", time slope " + short_num(r.time_slope));
    for (const auto& row : r.rows)
      run.say("eps=" + short_num(row.eps) + " fraction " + short_num(row.fraction) + " of " +
              std::to_string(row.sampled - row.kinks) + " points");
    return r.pass();
  }

  if (probe == "uniqueness") {
    UniquenessConfig uc;
    uc.f = sp.f;
    Expression g = expression(c, "verify", "g", n);
    uc.g = field(g);
    uc.dim = n;
    uc.K_lo = sp.K_lo;
    uc.K_hi = sp.K_hi;
    uc.T = b.T;
    uc.cell_res = c.integer("verify", "unique_cell_res", uc.cell_res);
    uc.dt_ratio = sp.dt_ratio;
    uc.stability_ratio = c.number("verify", "stability_ratio", uc.stability_ratio);
    if (uc.cell_res < 1) c.fail("verify", "unique_cell_res", "must be at least 1");
    if (!(uc.stability_ratio >= 1.0)) c.fail("verify", "stability_ratio", "must be at least 1");
    UniquenessReport r;
    run.phase("uniqueness", [&] { r = uniqueness_probe(uc, b.eps, b.t, b.s.forms, b.k); });
    std::string csv = "level,cell_res,dt,h,diff,C\n";
    for (std::size_t i = 0; i + 1 < r.levels.size(); ++i) {
      const auto& l = r.levels[i];
      csv += std::to_string(i) + "," + std::to_string(l.cell_res) + "," + num(l.dt) + "," + num(l.h) + "," +
             num(l.diff) + "," + num(l.C) + "\n";
    }
    run.write("uniqueness.csv", csv);
    run.checks["order_violations"] = r.order_violations;
    run.checks["checked"] = r.checked;
    run.checks["min_gap"] = r.min_gap;
    run.checks["stable"] = r.stable;
    run.say("ordering: " + std::to_string(r.order_violations) + " violations over " + std::to_string(r.checked) +
            " comparisons, gap in [" + short_num(r.min_gap) + ", " + short_num(r.max_gap) + "]");
    run.say("refinement constants: " + short_num(r.levels[0].C) + ", " + short_num(r.levels[1].C) +
            (r.stable ? " (stable)" : " (unstable)"));
    return r.pass();
  }
  throw ConfigError("unknown verify probe `" + probe + "`");
}

}  // namespace hjlab::cli
