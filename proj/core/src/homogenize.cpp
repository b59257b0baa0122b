#include "hjlab/homogenize.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>

#include "hjlab/error.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

void validate(const ExperimentSpec& spec) {
  const auto n = static_cast<std::size_t>(spec.dim);
  require(spec.dim >= 1 && spec.dim <= kMaxDim, "experiment dimension out of range");
  require(static_cast<bool>(spec.f), "experiment needs an initial datum f");
  require(!spec.eps_list.empty(), "eps_list must not be empty");
  for (std::size_t i = 0; i < spec.eps_list.size(); ++i) {
    require(spec.eps_list[i] > 0.0, "eps_list entries must be positive");
    if (i > 0) require(spec.eps_list[i] < spec.eps_list[i - 1], "eps_list must be strictly decreasing");
  }
  require(spec.T > 0.0, "T must be positive");
  require(spec.K_lo.size() == n && spec.K_hi.size() == n, "K box dimension mismatch");
  for (std::size_t d = 0; d < n; ++d) require(spec.K_lo[d] <= spec.K_hi[d], "K box bounds reversed");
  require(!spec.obs_times.empty(), "observation times must not be empty");
  for (std::size_t i = 0; i < spec.obs_times.size(); ++i) {
    require(spec.obs_times[i] > 0.0 && spec.obs_times[i] <= spec.T * (1.0 + 1e-12),
            "observation times must lie in (0, T]");
    if (i > 0) require(spec.obs_times[i] > spec.obs_times[i - 1], "observation times must increase");
  }
  require(spec.cell_res >= 1 && spec.dt_ratio > 0.0, "bad grid policy");
  require(spec.tol_mono >= 0.0 && spec.tol_lip >= 0.0 && spec.hopf_lax_dv > 0.0, "tolerances must be positive");
  require(spec.K_lip >= 0.0, "K must be non-negative");
}

double sampled_lipschitz(const ScalarField& f, std::span<const double> lo, std::span<const double> hi,
                         int res) {
  const int n = static_cast<int>(lo.size());
  BoxGrid g{n, Vec(lo.begin(), lo.end()), Vec(hi.begin(), hi.end()), res};
  Vec x(n), y(n);
  double worst = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    g.point(i, x);
    const double f0 = f(x);
    double s2 = 0.0;
    for (int d = 0; d < n; ++d) {
      if (g.step(d) <= 0.0) continue;
      y = x;
      y[d] += g.step(d);
      const double q = (f(y) - f0) / g.step(d);
      s2 += q * q;
    }
    worst = std::max(worst, std::sqrt(s2));
  }
  return worst;
}

namespace {

bool in_box(std::span<const double> z, const Vec& lo, const Vec& hi) {
  for (std::size_t d = 0; d < z.size(); ++d) {
    const double slack = 1e-12 * (1.0 + std::abs(lo[d]) + std::abs(hi[d]));
    if (z[d] < lo[d] - slack || z[d] > hi[d] + slack) return false;
  }
  return true;
}

}  // namespace

ValueField initial_field(const ScalarField& f, std::span<const double> K_lo, std::span<const double> K_hi,
                         double T, const StepConfig& cfg, int cell_res, const FormBasis& forms) {
  const int n = static_cast<int>(K_lo.size());
  const double eps = cfg.eps;
  Vec center(n);
  double r = 0.0;  // l1 ball around the centre containing K
  for (int d = 0; d < n; ++d) {
    center[d] = 0.5 * (K_lo[d] + K_hi[d]);
    r += 0.5 * (K_hi[d] - K_lo[d]);
  }
  CoverWindow w = preimage_window(eps, center, r, forms, cell_res);
  const double reach = static_cast<double>(step_count(T, cfg.dt)) * cfg.search_radius;
  const auto extra = static_cast<std::int64_t>(std::ceil(reach / eps));
  for (int d = 0; d < n; ++d) {
    w.cells.lo[d] -= extra;
    w.cells.hi[d] += extra;
  }
  return sample_field(eps, cell_res, point_box(w), reach, [&](std::span<const double> y) {
    std::array<double, kMaxDim> z{};
    scaled_period_map(forms, eps, y, {z.data(), y.size()});
    return f({z.data(), y.size()});
  });
}

ScaledSolution solve_scaled(const ExperimentSpec& spec, double eps, const LagrangianTable& table,
                            const FormBasis& forms, const SolverConstants& c, std::ostream* log) {
  validate(spec);
  const int n = spec.dim;
  ScaledSolution out;
  out.eps = eps;
  out.cfg = make_step_config(c, eps, spec.cell_res, spec.dt_ratio * eps);
  const auto m = step_count(spec.T, out.cfg.dt);
  std::vector<std::int64_t> obs;
  for (double t : spec.obs_times) obs.push_back(step_count(t, out.cfg.dt));

  ValueField cur = initial_field(spec.f, spec.K_lo, spec.K_hi, spec.T, out.cfg, spec.cell_res, forms);

  const LaxOperator op(out.cfg, table, spec.cell_res, n);
  auto& cert = out.lipschitz;
  cert.space_bound = c.b2 * (1.0 + spec.tol_lip);
  cert.time_bound = c.c1 * (1.0 + spec.tol_lip);
  auto note_space = [&](const ValueField& u) {
    const double s = space_lipschitz(u);
    cert.space = std::max(cert.space, s);
    if (s > cert.space_bound && cert.pass) {
      cert.pass = false;
      cert.violation = "space constant " + std::to_string(s) + " at t=" + std::to_string(u.time);
    }
  };
  note_space(cur);
  std::size_t next_obs = 0;
  for (std::int64_t k = 1; k <= m; ++k) {
    ValueField nxt = op.step(cur);
    nxt.time = static_cast<double>(k) * out.cfg.dt;
    note_space(nxt);
    std::int64_t idx[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
    for (std::int64_t i = 0; i < nxt.size(); ++i) {
      nxt.box.unflat(i, ks);
      const double q = std::abs(nxt.values[i] - cur.at(ks)) / out.cfg.dt;
      if (q > cert.time) {
        cert.time = q;
        if (q > cert.time_bound && cert.pass) {
          cert.pass = false;
          cert.violation = "time constant " + std::to_string(q) + " at t=" + std::to_string(nxt.time);
        }
      }
    }
    if (log) {
      const auto [lo, hi] = std::minmax_element(nxt.values.begin(), nxt.values.end());
      *log << "eps=" << eps << " step " << k << "/" << m << " t=" << nxt.time << " min=" << *lo
           << " max=" << *hi << "\n";
    }
    cur = std::move(nxt);
    while (next_obs < obs.size() && obs[next_obs] == k) {
      out.observed.push_back(cur);
      ++next_obs;
    }
  }
  return out;
}

HopfLax::HopfLax(const EffectiveTable& e, double dv) : dim_(e.v_grid.dim) {
  require(dv > 0.0, "velocity spacing must be positive");
  require(!e.hbar_dual.empty(), "effective Lagrangian not computed");
  const auto& g = e.v_grid;
  int res = 1;
  for (int d = 0; d < dim_; ++d)
    res = std::max(res, static_cast<int>(std::floor((g.hi[d] - g.lo[d]) / dv + 1e-9)) + 1);
  grid_ = BoxGrid{dim_, g.lo, g.hi, res};
  const auto N = grid_.size();
  vel_.resize(static_cast<std::size_t>(N * dim_));
  lbar_.resize(static_cast<std::size_t>(N));
  for (std::int64_t j = 0; j < N; ++j) {
    std::span<double> v{vel_.data() + j * dim_, static_cast<std::size_t>(dim_)};
    grid_.point(j, v);
    lbar_[j] = e.lbar_at(v);
  }
}

double HopfLax::operator()(const ScalarField& f, std::span<const double> z, double t) const {
  require(t > 0.0, "Hopf-Lax time must be positive");
  std::array<double, kMaxDim> y{};
  const std::span<const double> ys{y.data(), static_cast<std::size_t>(dim_)};
  double best = std::numeric_limits<double>::infinity();
  std::int64_t arg = 0;
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(lbar_.size()); ++j) {
    for (int d = 0; d < dim_; ++d) y[d] = z[d] - t * vel_[j * dim_ + d];
    const double val = f(ys) + t * lbar_[j];
    if (val < best) {
      best = val;
      arg = j;
    }
  }
  if (grid_.on_boundary(arg))
    throw Error(ErrorCode::DualRangeExceeded,
                "Hopf-Lax minimizer on the edge of the effective velocity grid at z=" + std::to_string(z[0]) +
                    ", t=" + std::to_string(t));
  return best;
}

double hopf_lax(const ScalarField& f, const EffectiveTable& e, std::span<const double> z, double t,
                double dv) {
  return HopfLax(e, dv)(f, z, t);
}

std::vector<ValueField> solve_homogenized(const ExperimentSpec& spec, const EffectiveTable& e,
                                          int points_per_unit) {
  validate(spec);
  require(points_per_unit >= 1, "points_per_unit must be positive");
  const HopfLax hl(e, spec.hopf_lax_dv);
  IndexBox box;
  for (int d = 0; d < spec.dim; ++d) {
    box.lo.push_back(static_cast<std::int64_t>(std::ceil(spec.K_lo[d] * points_per_unit - 1e-9)));
    box.hi.push_back(static_cast<std::int64_t>(std::floor(spec.K_hi[d] * points_per_unit + 1e-9)));
  }
  std::vector<ValueField> out;
  for (double t : spec.obs_times) {
    ValueField u = sample_field(1.0, points_per_unit, box, 0.0,
                                [&](std::span<const double> z) { return hl(spec.f, z, t); });
    u.time = t;
    out.push_back(std::move(u));
  }
  return out;
}

ConvergenceReport convergence_report(const ExperimentSpec& spec, const LagrangianTable& table,
                                     const FormBasis& forms, const EffectiveTable& e,
                                     const SolverConstants& c, std::ostream* log) {
  validate(spec);
  const HopfLax hl(e, spec.hopf_lax_dv);
  ConvergenceReport rep;
  rep.b2 = c.b2;
  rep.c1 = c.c1;
  for (double eps : spec.eps_list) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScaledSolution sol = solve_scaled(spec, eps, table, forms, c, log);
    ConvergenceRow row;
    row.eps = eps;
    row.space_lip = sol.lipschitz.space;
    row.time_lip = sol.lipschitz.time;
    row.lip_pass = sol.lipschitz.pass;
    for (const auto& u : sol.observed) {
      std::mutex mu;
      double err = 0.0;
      std::int64_t used = 0;
      parallel_for(u.size(), [&](std::int64_t b, std::int64_t en) {
        Vec y(spec.dim), z(spec.dim);
        double local = 0.0;
        std::int64_t cnt = 0;
        for (std::int64_t i = b; i < en; ++i) {
          u.point(i, y);
          scaled_period_map(forms, eps, y, z);
          if (!in_box(z, spec.K_lo, spec.K_hi)) continue;
          local = std::max(local, std::abs(u.values[i] - hl(spec.f, z, u.time)));
          ++cnt;
        }
        const std::lock_guard lock(mu);
        err = std::max(err, local);
        used += cnt;
      });
      row.error = std::max(row.error, err);
      row.points += used;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) *log << "eps=" << eps << " error=" << row.error << " lip=" << row.space_lip << "/" << row.time_lip << "\n";
    rep.rows.push_back(row);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].error > rep.rows[i - 1].error + spec.tol_mono) rep.monotone = false;
  rep.halved = rep.rows.back().error <= 0.5 * rep.rows.front().error;
  rep.lipschitz = std::all_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r.lip_pass; });
  const auto spread = [&](auto get) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rep.rows) {
      lo = std::min(lo, get(r));
      hi = std::max(hi, get(r));
    }
    return lo > 0.0 ? hi / lo - 1.0 : (hi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  };
  rep.space_spread = spread([](const ConvergenceRow& r) { return r.space_lip; });
  rep.time_spread = spread([](const ConvergenceRow& r) { return r.time_lip; });
  rep.equi = rep.space_spread <= spec.tol_spread && rep.time_spread <= spec.tol_spread;
  rep.pass = rep.monotone && rep.halved && rep.lipschitz && rep.equi;
  return rep;
}

void write_report_csv(std::ostream& out, const ConvergenceReport& r) {
  out << "eps,error,space_lip,time_lip,lip_pass,points\n";
  char buf[160];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%lld\n", row.eps, row.error, row.space_lip,
                  row.time_lip, row.lip_pass ? 1 : 0, static_cast<long long>(row.points));
    out << buf;
  }
}

void write_plot_data(std::ostream& out, const ConvergenceReport& r) {
  char buf[80];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", row.eps, row.error);
    out << buf;
  }
}

}  // namespace hjlab
