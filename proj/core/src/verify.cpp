#include "hjlab/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <mutex>

#include "hjlab/error.hpp"
#include "hjlab/homogenize.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Neighbour {
  double du;
  std::array<double, kMaxDim> dx;
  double ds;
  double q;  // |dx|^2 + ds^2
};

AuditReport audit(std::span<const ValueField> u, const HamiltonianModel& model, double eps,
                  const AuditConfig& cfg, bool max_test) {
  require(u.size() >= 2, "audit needs at least two time slices");
  require(eps > 0.0 && cfg.rho >= 1 && cfg.p_res >= 1 && cfg.stride >= 1, "bad audit configuration");
  require(!cfg.mu.empty(), "audit needs at least one curvature");
  for (double m : cfg.mu) require(m > 0.0, "curvatures must be positive");
  const int n = u.front().dim();
  require(model.dim() == n, "model/field dimension mismatch");
  const auto J = static_cast<int>(u.size()) - 1;
  const double h = u.front().spacing();
  // The neighbourhood is a space-time box of half-width rho * max(h, dt) so
  // that fronts moving at speeds up to dt/h grid points per step stay visible.
  const double dt = u[1].time - u[0].time;
  const std::int64_t rx = cfg.rho * std::max<std::int64_t>(1, std::llround(dt / h));

  // Gradient offsets around the central difference.
  std::int64_t np = 1;
  for (int d = 0; d < n; ++d) np *= cfg.p_res;
  std::vector<double> poff(static_cast<std::size_t>(np * n));
  for (std::int64_t k = 0; k < np; ++k) {
    std::int64_t f = k;
    for (int d = n - 1; d >= 0; --d) {
      const auto i = f % cfg.p_res;
      f /= cfg.p_res;
      poff[k * n + d] = cfg.p_res == 1 ? 0.0 : -cfg.p_span + 2.0 * cfg.p_span * static_cast<double>(i) / (cfg.p_res - 1);
    }
  }

  AuditReport rep;
  rep.worst_x.assign(n, 0.0);
  std::mutex mu;
  for (int j = 1; j <= J; ++j) {
    const int s_lo = -std::min(cfg.rho, j);
    const int s_hi = std::min(cfg.rho, J - j);
    const bool terminal = j == J;
    if (!terminal && s_hi < 1) continue;
    // Points whose whole space-time neighbourhood is sampled.
    IndexBox inner = u[j].box.shrunk(rx);
    for (int s = s_lo; s <= s_hi; ++s) inner = intersect(inner, u[j + s].box.shrunk(rx));
    if (inner.size() <= 0) continue;
    parallel_for(inner.size(), [&](std::int64_t b, std::int64_t e) {
      std::array<std::int64_t, kMaxDim> idx{}, nb{};
      const std::span<std::int64_t> ks{idx.data(), static_cast<std::size_t>(n)};
      const std::span<std::int64_t> ns{nb.data(), static_cast<std::size_t>(n)};
      std::vector<Neighbour> nbs;
      Vec x(n), xc(n), pc(n), p(n);
      AuditReport local;
      local.worst_x.assign(n, 0.0);
      for (std::int64_t i = b; i < e; ++i) {
        inner.unflat(i, ks);
        bool skip = false;
        for (int d = 0; d < n; ++d)
          if ((idx[d] - inner.lo[d]) % cfg.stride != 0) skip = true;
        if (skip) continue;
        const double u0 = u[j].at(ks);
        const double t0 = u[j].time;
        for (int d = 0; d < n; ++d) {
          x[d] = static_cast<double>(idx[d]) * h;
          xc[d] = x[d] / eps;
          std::copy_n(idx.begin(), n, nb.begin());
          nb[d] = idx[d] + 1;
          const double up = u[j].at(ns);
          nb[d] = idx[d] - 1;
          const double dn = u[j].at(ns);
          pc[d] = (up - dn) / (2.0 * h);
        }
        nbs.clear();
        const std::int64_t side = 2 * rx + 1;
        std::int64_t cube = 1;
        for (int d = 0; d < n; ++d) cube *= side;
        for (int s = s_lo; s <= s_hi; ++s)
          for (std::int64_t c = 0; c < cube; ++c) {
            std::int64_t f = c;
            Neighbour nbh{};
            double q = 0.0;
            bool centre = s == 0;
            for (int d = n - 1; d >= 0; --d) {
              const auto o = f % side - rx;
              f /= side;
              nb[d] = idx[d] + o;
              nbh.dx[d] = static_cast<double>(o) * h;
              q += nbh.dx[d] * nbh.dx[d];
              if (o != 0) centre = false;
            }
            if (centre) continue;
            nbh.ds = u[j + s].time - t0;
            nbh.du = u[j + s].at(ns) - u0;
            nbh.q = q + nbh.ds * nbh.ds;
            nbs.push_back(nbh);
          }
        ++local.points;
        bool violated = false;
        double worst = 0.0;
        for (std::int64_t k = 0; k < np; ++k) {
          for (int d = 0; d < n; ++d) p[d] = pc[d] + poff[k * n + d];
          const double H = model(xc, p);
          for (double m : cfg.mu) {
            // Max test: du <= p.dx + a ds + m q.  Min test: du >= p.dx + a ds - m q.
            const double sq = max_test ? m : -m;
            double a_lo = -kInf, a_hi = kInf;
            bool ok = true;
            for (const auto& nbh : nbs) {
              const double rhs = nbh.du - dot(p, {nbh.dx.data(), static_cast<std::size_t>(n)}) - sq * nbh.q;
              if (nbh.ds == 0.0) {
                if (max_test ? rhs > 0.0 : rhs < 0.0) {
                  ok = false;
                  break;
                }
                continue;
              }
              const double bound = rhs / nbh.ds;
              // max test: a ds >= rhs; min test: a ds <= rhs.
              const bool lower = max_test == (nbh.ds > 0.0);
              if (lower) a_lo = std::max(a_lo, bound);
              else a_hi = std::min(a_hi, bound);
            }
            if (!ok || a_lo > a_hi) continue;
            ++local.touching;
            const double margin = max_test ? a_hi + H - cfg.tol_visc : -(a_lo + H) - cfg.tol_visc;
            if (margin > 0.0) {
              violated = true;
              worst = std::max(worst, margin);
            }
          }
        }
        if (violated) {
          ++local.violations;
          if (worst > local.worst) {
            local.worst = worst;
            local.worst_x = x;
            local.worst_t = t0;
          }
        }
      }
      const std::lock_guard lock(mu);
      rep.points += local.points;
      rep.touching += local.touching;
      rep.violations += local.violations;
      // Ties resolved towards the earlier time and smaller x so the report is schedule-independent.
      if (local.worst > rep.worst ||
          (local.worst == rep.worst && local.worst > 0.0 &&
           (local.worst_t < rep.worst_t || (local.worst_t == rep.worst_t && local.worst_x < rep.worst_x)))) {
        rep.worst = local.worst;
        rep.worst_x = local.worst_x;
        rep.worst_t = local.worst_t;
      }
    });
  }
  return rep;
}

}  // namespace

AuditReport subsolution_audit(std::span<const ValueField> u, const HamiltonianModel& model, double eps,
                              const AuditConfig& cfg) {
  return audit(u, model, eps, cfg, true);
}

AuditReport supersolution_audit(std::span<const ValueField> u, const HamiltonianModel& model, double eps,
                                const AuditConfig& cfg) {
  return audit(u, model, eps, cfg, false);
}

// ---------------------------------------------------------------------------
// Doubling

namespace {

struct Slice {
  double t;
  IndexBox box;
  std::vector<double> u, v;
};

}  // namespace

DoublingReport doubling_probe(std::span<const ValueField> u, std::span<const ValueField> v,
                              const DoublingConfig& cfg) {
  require(!u.empty() && u.size() == v.size(), "doubling needs matching field sequences");
  require(cfg.lambda > 0.0, "lambda must be positive");
  require(cfg.boundary_width >= 1, "boundary width must be at least one grid point");
  require(!cfg.deltas.empty(), "delta list must not be empty");
  for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
    require(cfg.deltas[i] > 0.0, "deltas must be positive");
    if (i > 0) require(cfg.deltas[i] < cfg.deltas[i - 1], "deltas must decrease");
  }
  const int n = u.front().dim();
  require(static_cast<int>(cfg.omega_lo.size()) == n && static_cast<int>(cfg.omega_hi.size()) == n,
          "Omega dimension mismatch");
  const double h = u.front().spacing();

  IndexBox omega;
  for (int d = 0; d < n; ++d) {
    omega.lo.push_back(static_cast<std::int64_t>(std::ceil(cfg.omega_lo[d] / h - 1e-9)));
    omega.hi.push_back(static_cast<std::int64_t>(std::floor(cfg.omega_hi[d] / h + 1e-9)));
  }
  std::vector<Slice> slices;
  for (std::size_t j = 0; j < u.size(); ++j) {
    require(u[j].cell_res == v[j].cell_res && u[j].eps == v[j].eps, "u and v grids differ");
    require(std::abs(u[j].time - v[j].time) <= 1e-12 * (1.0 + std::abs(u[j].time)), "u and v times differ");
    if (u[j].time < cfg.t_lo - 1e-12 || u[j].time > cfg.t_hi + 1e-12) continue;
    Slice s;
    s.t = u[j].time;
    s.box = intersect(intersect(u[j].box, v[j].box), omega);
    if (s.box.size() <= 0) continue;
    std::int64_t idx[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
    for (std::int64_t i = 0; i < s.box.size(); ++i) {
      s.box.unflat(i, ks);
      s.u.push_back(u[j].at(ks));
      s.v.push_back(v[j].at(ks));
    }
    slices.push_back(std::move(s));
  }
  require(!slices.empty(), "Omega contains no grid points");
  // Comparisons need a common spatial box across slices.
  IndexBox common = slices.front().box;
  for (const auto& s : slices) common = intersect(common, s.box);
  require(common.size() > 0, "Omega slices have no common points");

  DoublingReport rep;
  // Plain comparison of u - v over Omega and its parabolic boundary.
  rep.interior_max = -kInf;
  rep.boundary_max = -kInf;
  std::int64_t idx[kMaxDim];
  const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
  for (std::size_t j = 0; j < slices.size(); ++j) {
    const auto& s = slices[j];
    for (std::int64_t i = 0; i < common.size(); ++i) {
      common.unflat(i, ks);
      const auto f = s.box.flat(ks);
      const double diff = s.u[f] - s.v[f];
      rep.interior_max = std::max(rep.interior_max, diff);
      bool edge = j == 0;
      for (int d = 0; d < n && !edge; ++d)
        if (idx[d] < common.lo[d] + cfg.boundary_width || idx[d] > common.hi[d] - cfg.boundary_width) edge = true;
      if (edge) rep.boundary_max = std::max(rep.boundary_max, diff);
    }
  }
  rep.comparison_pass = rep.interior_max <= rep.boundary_max + cfg.tol;

  double umax = -kInf, vmin = kInf;
  for (const auto& s : slices) {
    for (double x : s.u) umax = std::max(umax, x - cfg.lambda * s.t);
    for (double x : s.v) vmin = std::min(vmin, x + cfg.lambda * s.t);
  }
  (void)umax;

  for (double delta : cfg.deltas) {
    DoublingRow row;
    row.delta = delta;
    // Start from the best diagonal point.
    double best = -kInf;
    std::size_t bj = 0, bs = 0;
    std::int64_t bi = 0, bk = 0;
    for (std::size_t j = 0; j < slices.size(); ++j)
      for (std::int64_t i = 0; i < slices[j].box.size(); ++i) {
        const double val = slices[j].u[i] - slices[j].v[i] - 2.0 * cfg.lambda * slices[j].t;
        if (val > best) {
          best = val;
          bj = bs = j;
          bi = bk = i;
        }
      }
    std::int64_t jdx[kMaxDim];
    const std::span<std::int64_t> js{jdx, static_cast<std::size_t>(n)};
    for (std::size_t j = 0; j < slices.size(); ++j) {
      const auto& a = slices[j];
      for (std::int64_t i = 0; i < a.box.size(); ++i) {
        const double ut = a.u[i] - cfg.lambda * a.t;
        const double budget = ut - vmin - best;  // the penalty must stay below this
        if (budget <= 0.0) continue;
        const double reach = std::sqrt(delta * budget);
        a.box.unflat(i, ks);
        const auto rk = static_cast<std::int64_t>(std::floor(reach / h));
        for (std::size_t s = 0; s < slices.size(); ++s) {
          const auto& b = slices[s];
          const double dts = a.t - b.t;
          if (std::abs(dts) > reach) continue;
          IndexBox near;
          for (int d = 0; d < n; ++d) {
            near.lo.push_back(idx[d] - rk);
            near.hi.push_back(idx[d] + rk);
          }
          near = intersect(near, b.box);
          for (std::int64_t k = 0; k < near.size(); ++k) {
            near.unflat(k, js);
            double d2 = dts * dts;
            for (int d = 0; d < n; ++d) {
              const double dx = static_cast<double>(idx[d] - jdx[d]) * h;
              d2 += dx * dx;
            }
            const auto f = b.box.flat(js);
            const double val = ut - b.v[f] - cfg.lambda * b.t - d2 / delta;
            if (val > best) {
              best = val;
              bj = j;
              bi = i;
              bs = s;
              bk = f;
            }
          }
        }
      }
    }
    row.value = best;
    row.t = slices[bj].t;
    row.s = slices[bs].t;
    row.x.resize(n);
    row.y.resize(n);
    slices[bj].box.unflat(bi, ks);
    slices[bs].box.unflat(bk, js);
    double dx2 = 0.0;
    for (int d = 0; d < n; ++d) {
      row.x[d] = static_cast<double>(idx[d]) * h;
      row.y[d] = static_cast<double>(jdx[d]) * h;
      dx2 += (row.x[d] - row.y[d]) * (row.x[d] - row.y[d]);
    }
    row.gap = std::max(std::abs(row.t - row.s), std::sqrt(dx2));
    rep.q1 = std::max(rep.q1, row.gap / std::sqrt(delta));
    rep.rows.push_back(row);
  }

  // Slope of log gap against log delta over the rows with a positive gap.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (const auto& r : rep.rows)
    if (r.gap > 0.0) {
      const double lx = std::log(r.delta), ly = std::log(r.gap);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
  if (m >= 2 && sxx * m - sx * sx > 0.0) {
    rep.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.envelope_pass = rep.exponent >= cfg.min_exponent;
  } else if (m == 0) {
    rep.exponent = kInf;  // every maximizer on the diagonal
    rep.envelope_pass = true;
  } else {
    rep.exponent = std::numeric_limits<double>::quiet_NaN();
    rep.envelope_pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Perturbed test function

bool PerturbedReport::pass() const {
  return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
}

PerturbedReport perturbed_test_probe(const HamiltonianModel& model, const FormBasis& forms,
                                     const Corrector& corrector, double hbar, const TestFunctionBundle& b,
                                     double theta, std::span<const double> eps_list,
                                     const PerturbedConfig& cfg) {
  const int n = model.dim();
  if (!(theta > 0.0)) throw Error(ErrorCode::InvalidArgument, "theta must be positive (got " + std::to_string(theta) + ")");
  require(static_cast<int>(b.P.size()) == n && static_cast<int>(b.y0.size()) == n, "bundle dimension mismatch");
  require(b.mu >= 0.0 && b.radius > 0.0, "bundle needs mu >= 0 and radius > 0");
  require(corrector.dim == n, "corrector dimension mismatch");
  for (int d = 0; d < n; ++d)
    if (std::abs(corrector.P[d] - b.P[d]) > cfg.tol_P)
      throw Error(ErrorCode::CorrectorMismatch, "corrector computed at P=" + std::to_string(corrector.P[d]) +
                                                    " but the bundle gradient is " + std::to_string(b.P[d]));
  PerturbedReport rep;
  rep.theta = theta;
  rep.time_slope = theta - hbar;
  const CellGrid cell{n, corrector.cell_res};
  for (double eps : eps_list) {
    require(eps > 0.0, "eps must be positive");
    PerturbedRow row;
    row.eps = eps;
    row.min_value = kInf;
    const CoverWindow w = preimage_window(eps, b.y0, b.radius * std::sqrt(static_cast<double>(n)), forms,
                                          corrector.cell_res);
    const IndexBox box = point_box(w);
    std::int64_t idx[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
    Vec x(n), z(n), zero(n, 0.0), grad(n), p(n), dw(n);
    for (std::int64_t i = 0; i < box.size(); ++i) {
      box.unflat(i, ks);
      for (int d = 0; d < n; ++d) x[d] = static_cast<double>(idx[d]) / corrector.cell_res;
      const Vec G = period_map(forms, x, zero);
      double r2 = 0.0;
      for (int d = 0; d < n; ++d) {
        z[d] = eps * G[d];
        r2 += (z[d] - b.y0[d]) * (z[d] - b.y0[d]);
      }
      if (r2 > b.radius * b.radius) continue;
      ++row.sampled;
      const auto cf = cell.flat_wrapped(ks);
      if (corrector.kink(cf) > cfg.tol_kink) {
        ++row.kinks;
        continue;
      }
      for (int d = 0; d < n; ++d) grad[d] = b.P[d] + b.mu * (z[d] - b.y0[d]);
      form_combination(forms, grad, x, p);
      corrector.upwind_gradient(cf, dw);
      for (int d = 0; d < n; ++d) p[d] += dw[d];
      const double q = rep.time_slope + model(x, p);
      row.min_value = std::min(row.min_value, q);
      if (q >= 0.5 * theta) ++row.satisfied;
    }
    const auto used = row.sampled - row.kinks;
    row.fraction = used > 0 ? static_cast<double>(row.satisfied) / static_cast<double>(used) : 0.0;
    row.pass = used > 0 && row.fraction >= cfg.threshold;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness

std::vector<ValueField> solve_on_box(const ScalarField& f, std::span<const double> K_lo,
                                     std::span<const double> K_hi, double T, double eps, int cell_res,
                                     double dt, const LagrangianTable& table, const FormBasis& forms,
                                     const SolverConstants& c) {
  const StepConfig cfg = make_step_config(c, eps, cell_res, dt);
  const ValueField f0 = initial_field(f, K_lo, K_hi, T, cfg, cell_res, forms);
  return solve(f0, T, cfg, table);
}

void ordering_check(std::span<const ValueField> lower, std::span<const ValueField> upper,
                    std::int64_t& checked, std::int64_t& violations, double& min_gap, double& max_gap) {
  require(lower.size() == upper.size(), "ordering check needs matching sequences");
  for (std::size_t j = 0; j < lower.size(); ++j) {
    const IndexBox common = intersect(lower[j].box, upper[j].box);
    std::int64_t idx[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(common.dim())};
    for (std::int64_t i = 0; i < common.size(); ++i) {
      common.unflat(i, ks);
      const double gap = upper[j].at(ks) - lower[j].at(ks);
      ++checked;
      if (gap < 0.0) ++violations;
      min_gap = std::min(min_gap, gap);
      max_gap = std::max(max_gap, gap);
    }
  }
}

UniquenessReport uniqueness_probe(const UniquenessConfig& cfg, double eps, const LagrangianTable& table,
                                  const FormBasis& forms, const SolverConstants& c) {
  require(cfg.f && cfg.g, "uniqueness probe needs f and g");
  require(eps > 0.0 && cfg.T > 0.0 && cfg.cell_res >= 1 && cfg.dt_ratio > 0.0, "bad uniqueness configuration");
  const int n = cfg.dim;
  UniquenessReport rep;
  rep.min_gap = kInf;
  rep.max_gap = -kInf;
  {
    const double dt = cfg.dt_ratio * eps;
    const auto lo = solve_on_box(cfg.f, cfg.K_lo, cfg.K_hi, cfg.T, eps, cfg.cell_res, dt, table, forms, c);
    const ScalarField fg = [f = cfg.f, g = cfg.g](std::span<const double> z) { return f(z) + g(z); };
    const auto hi = solve_on_box(fg, cfg.K_lo, cfg.K_hi, cfg.T, eps, cfg.cell_res, dt, table, forms, c);
    ordering_check(lo, hi, rep.checked, rep.order_violations, rep.min_gap, rep.max_gap);
  }

  std::vector<ValueField> finals;
  for (int level = 0; level < 3; ++level) {
    const int res = cfg.cell_res << level;
    const double dt = cfg.dt_ratio * eps / static_cast<double>(1 << level);
    const StepConfig sc = make_step_config(c, eps, res, dt);
    const ValueField f0 = initial_field(cfg.f, cfg.K_lo, cfg.K_hi, cfg.T, sc, res, forms);
    const LaxOperator op(sc, table, res, n);
    ValueField cur = f0;
    for (std::int64_t k = 0, m = step_count(cfg.T, dt); k < m; ++k) cur = op.step(cur);
    finals.push_back(std::move(cur));
    UniquenessLevel lv;
    lv.cell_res = res;
    lv.dt = dt;
    lv.h = eps / res;
    rep.levels.push_back(lv);
  }
  // Compare level l with level l+1 on the coarse points whose image lies in K.
  for (int level = 0; level + 1 < 3; ++level) {
    const auto& a = finals[level];
    const auto& b = finals[level + 1];
    double diff = 0.0;
    std::int64_t idx[kMaxDim], fine[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
    const std::span<std::int64_t> fs{fine, static_cast<std::size_t>(n)};
    Vec y(n), z(n);
    for (std::int64_t i = 0; i < a.size(); ++i) {
      a.box.unflat(i, ks);
      for (int d = 0; d < n; ++d) fine[d] = 2 * idx[d];
      if (!b.box.contains(fs)) continue;
      a.point(i, y);
      scaled_period_map(forms, eps, y, z);
      bool inside = true;
      for (int d = 0; d < n; ++d)
        if (z[d] < cfg.K_lo[d] - 1e-12 || z[d] > cfg.K_hi[d] + 1e-12) inside = false;
      if (!inside) continue;
      diff = std::max(diff, std::abs(a.values[i] - b.at(fs)));
    }
    auto& lv = rep.levels[level];
    lv.diff = diff;
    lv.C = diff / (lv.dt + lv.h);
  }
  const double c0 = rep.levels[0].C, c1 = rep.levels[1].C;
  rep.stable = c0 == 0.0 ? c1 == 0.0 : (c1 <= cfg.stability_ratio * c0 && c1 >= c0 / cfg.stability_ratio);
  return rep;
}

}  // namespace hjlab
