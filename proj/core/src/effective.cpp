#include "hjlab/effective.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hjlab/error.hpp"
#include "hjlab/lax_oleinik.hpp"
#include "hjlab/numerics.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

// ---------------------------------------------------------------------------
// BoxGrid

BoxGrid BoxGrid::uniform(int dim, double lo, double hi, int res) {
  require(dim >= 1 && dim <= kMaxDim, "grid dimension out of range");
  require(res >= 1 && hi >= lo, "bad grid bounds");
  return BoxGrid{dim, Vec(dim, lo), Vec(dim, hi), res};
}

std::int64_t BoxGrid::size() const {
  std::int64_t n = 1;
  for (int d = 0; d < dim; ++d) n *= res;
  return n;
}

void BoxGrid::point(std::int64_t flat, std::span<double> out) const {
  for (int d = dim - 1; d >= 0; --d) {
    out[d] = lo[d] + static_cast<double>(flat % res) * step(d);
    flat /= res;
  }
}

bool BoxGrid::on_boundary(std::int64_t flat) const {
  if (res <= 1) return true;
  for (int d = 0; d < dim; ++d) {
    const auto k = flat % res;
    if (k == 0 || k == res - 1) return true;
    flat /= res;
  }
  return false;
}

namespace {

double grid_interpolate(const BoxGrid& g, std::span<const double> data, std::span<const double> q,
                        const char* what) {
  std::array<std::int64_t, kMaxDim> i0{};
  std::array<double, kMaxDim> wt{};
  for (int d = 0; d < g.dim; ++d) {
    const double slack = 1e-12 * (1.0 + std::abs(g.lo[d]) + std::abs(g.hi[d]));
    if (q[d] < g.lo[d] - slack || q[d] > g.hi[d] + slack)
      throw Error(ErrorCode::DualRangeExceeded, std::string(what) + " query " + std::to_string(q[d]) +
                                                    " outside [" + std::to_string(g.lo[d]) + ", " +
                                                    std::to_string(g.hi[d]) + "]");
    if (g.res == 1) {
      i0[d] = 0;
      wt[d] = 0.0;
      continue;
    }
    const double s = (q[d] - g.lo[d]) / g.step(d);
    i0[d] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(s)), 0, g.res - 2);
    wt[d] = std::clamp(s - static_cast<double>(i0[d]), 0.0, 1.0);
  }
  double acc = 0.0;
  for (int c = 0; c < (1 << g.dim); ++c) {
    double w = 1.0;
    std::int64_t f = 0;
    for (int d = 0; d < g.dim; ++d) {
      const bool hi = (c >> d) & 1;
      if (hi && g.res == 1) {
        w = 0.0;
        break;
      }
      w *= hi ? wt[d] : 1.0 - wt[d];
      f = f * g.res + i0[d] + (hi ? 1 : 0);
    }
    if (w != 0.0) acc += w * data[static_cast<std::size_t>(f)];
  }
  return acc;
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Corrector

double Corrector::value(std::span<const double> x) const {
  std::array<std::int64_t, kMaxDim> i0{};
  std::array<double, kMaxDim> wt{};
  for (int d = 0; d < dim; ++d) {
    const double s = wrap_unit(x[d]) * cell_res;
    const auto k = static_cast<std::int64_t>(std::floor(s));
    i0[d] = k;
    wt[d] = s - static_cast<double>(k);
  }
  double acc = 0.0;
  for (int c = 0; c < (1 << dim); ++c) {
    double w = 1.0;
    std::int64_t f = 0;
    for (int d = 0; d < dim; ++d) {
      const bool hi = (c >> d) & 1;
      w *= hi ? wt[d] : 1.0 - wt[d];
      f = f * cell_res + floor_mod(i0[d] + (hi ? 1 : 0), cell_res);
    }
    if (w != 0.0) acc += w * this->w[static_cast<std::size_t>(f)];
  }
  return acc;
}

void Corrector::upwind_gradient(std::int64_t flat, std::span<double> out) const {
  const CellGrid g{dim, cell_res};
  std::array<std::int64_t, kMaxDim> idx{};
  std::int64_t f = flat;
  for (int d = dim - 1; d >= 0; --d) {
    idx[d] = f % cell_res;
    f /= cell_res;
  }
  const double h = 1.0 / cell_res;
  const std::span<const std::int64_t> ks{idx.data(), static_cast<std::size_t>(dim)};
  const double w0 = w[flat];
  for (int d = 0; d < dim; ++d) {
    const auto k = idx[d];
    idx[d] = k + 1;
    const double up = w[g.flat_wrapped(ks)];
    idx[d] = k - 1;
    const double dn = w[g.flat_wrapped(ks)];
    idx[d] = k;
    out[d] = up < dn ? (up - w0) / h : (w0 - dn) / h;
  }
}

double Corrector::kink(std::int64_t flat) const {
  const CellGrid g{dim, cell_res};
  std::array<std::int64_t, kMaxDim> idx{};
  std::int64_t f = flat;
  for (int d = dim - 1; d >= 0; --d) {
    idx[d] = f % cell_res;
    f /= cell_res;
  }
  const double h = 1.0 / cell_res;
  const std::span<const std::int64_t> ks{idx.data(), static_cast<std::size_t>(dim)};
  const double w0 = w[flat];
  double worst = 0.0;
  for (int d = 0; d < dim; ++d) {
    const auto k = idx[d];
    idx[d] = k + 1;
    const double up = w[g.flat_wrapped(ks)];
    idx[d] = k - 1;
    const double dn = w[g.flat_wrapped(ks)];
    idx[d] = k;
    worst = std::max(worst, std::abs((up - w0) / h - (w0 - dn) / h));
  }
  return worst;
}

void corrector_residual(const HamiltonianModel& model, const FormBasis& forms, double tol_cell,
                        Corrector& c) {
  const CellGrid g{c.dim, c.cell_res};
  const auto N = g.size();
  std::vector<double> res(static_cast<std::size_t>(N));
  parallel_for(N, [&](std::int64_t b, std::int64_t e) {
    Vec x(c.dim), p(c.dim), dw(c.dim);
    for (std::int64_t i = b; i < e; ++i) {
      g.coords(i, x);
      form_combination(forms, c.P, x, p);
      c.upwind_gradient(i, dw);
      for (int d = 0; d < c.dim; ++d) p[d] += dw[d];
      res[i] = std::abs(model(x, p) - c.hbar);
    }
  });
  c.residual = *std::max_element(res.begin(), res.end());
  const auto ok = std::count_if(res.begin(), res.end(), [&](double r) { return r <= tol_cell; });
  c.residual_fraction = static_cast<double>(ok) / static_cast<double>(N);
}

// ---------------------------------------------------------------------------
// Long-time averaging

LongtimeResult effective_longtime(const HamiltonianModel& model, const LagrangianTable& table,
                                  std::span<const double> P, const FormBasis& forms,
                                  const LongtimeConfig& cfg) {
  const int n = model.dim();
  require(table.dim() == n && static_cast<int>(P.size()) == n, "dimension mismatch");
  require(static_cast<int>(forms.size()) == n, "form basis size mismatch");
  require(cfg.cell_res >= 2 && cfg.dt > 0.0 && cfg.T > 0.0, "bad long-time configuration");
  require(cfg.tol_hbar > 0.0 && cfg.tol_cell > 0.0, "tolerances must be positive");
  const CellGrid g{n, cfg.cell_res};
  const auto N = g.size();
  const double h = g.spacing();
  const auto m = step_count(cfg.T, cfg.dt);
  require(m >= 2, "horizon must cover at least two steps");
  const auto half = m / 2;

  // Speed cap: |v| over the energy sublevel {E <= max_x H(x, g(P)(x))}.
  double hmax = -std::numeric_limits<double>::infinity();
  std::vector<double> phi(static_cast<std::size_t>(N));
  {
    Vec x(n), p(n);
    for (std::int64_t i = 0; i < N; ++i) {
      g.coords(i, x);
      form_combination(forms, P, x, p);
      hmax = std::max(hmax, model(x, p));
      phi[i] = potential_combination(forms, P, x);
    }
  }
  double speed = 0.0;
  bool edge = false;
  for (std::int64_t ix = 0; ix < table.x_count(); ++ix)
    for (std::int64_t iv = 0; iv < table.v_count(); ++iv)
      if (table.E(ix, iv) <= hmax) {
        speed = std::max(speed, table.speed(iv));
        for (int d = 0; d < n; ++d)
          if (std::abs(table.velocity(iv, d)) >= table.v_max() * (1.0 - 1e-12)) edge = true;
      }
  if (edge)
    throw Error(ErrorCode::TableWindowTooSmall,
                "energy sublevel of max H(x, g(P)) reaches the velocity window; widen v_max");
  speed = (speed + table.dv()) * cfg.speed_safety;
  auto r = static_cast<std::int64_t>(std::ceil(speed * cfg.dt / h));
  r = std::max<std::int64_t>(r, 1);
  if (static_cast<double>(r) * h / cfg.dt > table.v_max())
    throw Error(ErrorCode::VelocityOutOfWindow,
                "cell search speed " + std::to_string(static_cast<double>(r) * h / cfg.dt) +
                    " exceeds the table window " + std::to_string(table.v_max()));

  const auto offsets = ball_offsets(n, r);
  const auto noff = static_cast<std::int64_t>(offsets.size());
  // P . A . (x - y): the integral of the constant part along the segment.
  Vec pa(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < n; ++d) pa[d] += P[i] * forms[i].constant[d];

  std::vector<double> kernel(static_cast<std::size_t>(N * noff));
  std::vector<std::int64_t> source(kernel.size());
  parallel_for(N, [&](std::int64_t b, std::int64_t e) {
    Vec x(n), v(n);
    std::array<std::int64_t, kMaxDim> idx{};
    for (std::int64_t i = b; i < e; ++i) {
      g.coords(i, x);
      std::int64_t f = i;
      for (int d = n - 1; d >= 0; --d) {
        idx[d] = f % cfg.cell_res;
        f /= cfg.cell_res;
      }
      for (std::int64_t j = 0; j < noff; ++j) {
        std::array<std::int64_t, kMaxDim> y{};
        double work = 0.0;
        for (int d = 0; d < n; ++d) {
          const double disp = static_cast<double>(offsets[j][d]) * h;
          v[d] = disp / cfg.dt;
          work += pa[d] * disp;
          y[d] = idx[d] - offsets[j][d];
        }
        const auto src = g.flat_wrapped({y.data(), static_cast<std::size_t>(n)});
        work += phi[i] - phi[src];
        kernel[i * noff + j] = cfg.dt * table.value(x, v) - work;
        source[i * noff + j] = src;
      }
    }
  });

  std::vector<double> u(static_cast<std::size_t>(N), 0.0), next(u.size()), u_half;
  for (std::int64_t k = 1; k <= m; ++k) {
    parallel_for(N, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t i = b; i < e; ++i) {
        const double* kern = kernel.data() + i * noff;
        const std::int64_t* src = source.data() + i * noff;
        double best = std::numeric_limits<double>::infinity();
        for (std::int64_t j = 0; j < noff; ++j) best = std::min(best, u[src[j]] + kern[j]);
        next[i] = best;
      }
    });
    u.swap(next);
    if (k == half) u_half = u;
  }

  const double T = static_cast<double>(m) * cfg.dt;
  const double Th = static_cast<double>(half) * cfg.dt;
  LongtimeResult out;
  out.hbar_T = -u[0] / T;
  out.hbar_half = -u_half[0] / Th;
  out.hbar = 2.0 * out.hbar_T - out.hbar_half;
  for (std::int64_t i = 0; i < N; ++i) out.drift = std::max(out.drift, std::abs(u[i] / T - u_half[i] / Th));

  Corrector& c = out.corrector;
  c.P.assign(P.begin(), P.end());
  c.dim = n;
  c.cell_res = cfg.cell_res;
  c.hbar = out.hbar;
  c.w.resize(u.size());
  for (std::int64_t i = 0; i < N; ++i) c.w[i] = u[i] - u[0];
  corrector_residual(model, forms, cfg.tol_cell, c);

  if (out.drift > cfg.tol_hbar)
    throw Error(ErrorCode::NotConverged, "sup|u(T)/T - u(T/2)/(T/2)| = " + std::to_string(out.drift) +
                                             " exceeds tol_hbar " + std::to_string(cfg.tol_hbar) +
                                             "; increase T");
  return out;
}

// ---------------------------------------------------------------------------
// Inf-sup formula

InfSupResult effective_infsup(const HamiltonianModel& model, std::span<const double> P,
                              const FormBasis& forms, int harmonics, const InfSupConfig& cfg) {
  const int n = model.dim();
  require(static_cast<int>(P.size()) == n && static_cast<int>(forms.size()) == n, "dimension mismatch");
  require(harmonics >= 0, "harmonics must be non-negative");
  require(cfg.x_res >= 2 && cfg.tol_opt > 0.0 && cfg.max_sweeps >= 1, "bad optimizer configuration");
  const CellGrid g{n, cfg.x_res};
  const auto N = g.size();

  std::vector<HamiltonianModel::Fiber> fibers;
  fibers.reserve(static_cast<std::size_t>(N));
  std::vector<double> p0(static_cast<std::size_t>(N * n));
  {
    Vec x(n);
    for (std::int64_t i = 0; i < N; ++i) {
      g.coords(i, x);
      fibers.push_back(model.fiber(x));
      form_combination(forms, P, x, {p0.data() + i * n, static_cast<std::size_t>(n)});
    }
  }

  // Half lattice: 1 <= |k|_inf <= harmonics, first non-zero component positive.
  std::vector<IVec> ks;
  {
    const std::int64_t side = 2 * harmonics + 1;
    const auto total = ipow(side, n);
    for (std::int64_t f = 0; f < total && harmonics > 0; ++f) {
      IVec k(n);
      std::int64_t t = f;
      for (int d = n - 1; d >= 0; --d) {
        k[d] = t % side - harmonics;
        t /= side;
      }
      int first = 0;
      while (first < n && k[first] == 0) ++first;
      if (first < n && k[first] > 0) ks.push_back(k);
    }
  }
  const auto nb = static_cast<std::int64_t>(2 * ks.size());
  std::vector<double> grad(static_cast<std::size_t>(nb * N * n));
  {
    Vec x(n);
    for (std::int64_t i = 0; i < N; ++i) {
      g.coords(i, x);
      for (std::size_t q = 0; q < ks.size(); ++q) {
        double arg = 0.0;
        for (int d = 0; d < n; ++d) arg += static_cast<double>(ks[q][d]) * x[d];
        arg *= kTwoPi;
        const double s = std::sin(arg), c = std::cos(arg);
        for (int d = 0; d < n; ++d) {
          const double kd = kTwoPi * static_cast<double>(ks[q][d]);
          grad[((2 * q) * N + i) * n + d] = -kd * s;      // cos basis
          grad[((2 * q + 1) * N + i) * n + d] = kd * c;   // sin basis
        }
      }
    }
  }

  std::vector<double> p = p0, Hx(static_cast<std::size_t>(N)), trial(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) Hx[i] = fibers[i]({p.data() + i * n, static_cast<std::size_t>(n)});

  auto aggregate = [&](const std::vector<double>& h, double tau) {
    const double M = *std::max_element(h.begin(), h.end());
    if (tau <= 0.0) return M;
    double s = 0.0;
    for (double v : h) s += std::exp((v - M) / tau);
    return M + tau * std::log(s);
  };
  auto eval_move = [&](std::int64_t b, double delta, std::vector<double>& out) {
    std::array<double, kMaxDim> q{};
    const double* gb = grad.data() + b * N * n;
    for (std::int64_t i = 0; i < N; ++i) {
      for (int d = 0; d < n; ++d) q[d] = p[i * n + d] + delta * gb[i * n + d];
      out[i] = fibers[i]({q.data(), static_cast<std::size_t>(n)});
    }
  };

  InfSupResult res;
  res.theta.assign(static_cast<std::size_t>(nb), 0.0);
  Vec theta = res.theta;
  double best = aggregate(Hx, 0.0);
  res.value = best;
  std::vector<double> step(static_cast<std::size_t>(nb));
  for (std::size_t q = 0; q < ks.size(); ++q) {
    double kn = 0.0;
    for (auto k : ks[q]) kn += static_cast<double>(k * k);
    step[2 * q] = step[2 * q + 1] = 0.5 / (kTwoPi * std::sqrt(kn));
  }

  std::vector<double> stages = cfg.temperatures;
  stages.push_back(0.0);
  for (std::size_t st = 0; st < stages.size() && nb > 0; ++st) {
    const double tau = stages[st];
    const bool last = st + 1 == stages.size();
    double current = aggregate(Hx, tau);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
      ++res.sweeps;
      const double start = current;
      for (std::int64_t b = 0; b < nb; ++b) {
        auto line = [&](double delta) {
          eval_move(b, delta, trial);
          return aggregate(trial, tau);
        };
        double s = step[b], arg = 0.0, val = current;
        for (int grow = 0; grow < 12; ++grow) {
          auto [a, v] = golden_section_min(line, -s, s, 1e-12 + 1e-9 * s);
          arg = a;
          val = v;
          if (std::abs(a) < 0.9 * s) break;
          s *= 2.0;
        }
        if (val < current) {
          eval_move(b, arg, Hx);
          const double* gb = grad.data() + b * N * n;
          for (std::int64_t i = 0; i < N * n; ++i) p[i] += arg * gb[i];
          theta[b] += arg;
          current = aggregate(Hx, tau);
          step[b] = std::max(2.0 * std::abs(arg), 1e-8);
          const double truemax = aggregate(Hx, 0.0);
          if (truemax < best) {
            best = truemax;
            res.theta = theta;
          }
        }
      }
      if (start - current < cfg.tol_opt) {
        if (last) res.stalled = true;
        break;
      }
    }
  }
  res.value = best;
  return res;
}

// ---------------------------------------------------------------------------
// Effective table

double EffectiveTable::hbar_at(std::span<const double> P) const {
  return grid_interpolate(P_grid, hbar, P, "hbar");
}

double EffectiveTable::lbar_at(std::span<const double> v) const {
  require(!hbar_dual.empty(), "effective Lagrangian not computed");
  return grid_interpolate(v_grid, hbar_dual, v, "lbar");
}

double grid_convexity_violation(const BoxGrid& g, std::span<const double> f) {
  double worst = 0.0;
  if (g.res < 3) return worst;
  std::vector<std::int64_t> stride(g.dim);
  std::int64_t s = 1;
  for (int d = g.dim - 1; d >= 0; --d) {
    stride[d] = s;
    s *= g.res;
  }
  for (std::int64_t i = 0; i < g.size(); ++i)
    for (int d = 0; d < g.dim; ++d) {
      const auto k = (i / stride[d]) % g.res;
      if (k == 0 || k == g.res - 1) continue;
      worst = std::max(worst, -(f[i - stride[d]] - 2.0 * f[i] + f[i + stride[d]]));
    }
  return worst;
}

EffectiveTable effective_lagrangian(const EffectiveTable& t, const BoxGrid& v_grid, double tol_convex) {
  require(static_cast<std::int64_t>(t.hbar.size()) == t.P_grid.size(), "hbar size mismatch");
  require(v_grid.dim == t.P_grid.dim, "velocity grid dimension mismatch");
  EffectiveTable out = t;
  out.v_grid = v_grid;
  const int n = v_grid.dim;
  const auto np = t.P_grid.size();
  std::vector<double> pts(static_cast<std::size_t>(np * n));
  for (std::int64_t j = 0; j < np; ++j) t.P_grid.point(j, {pts.data() + j * n, static_cast<std::size_t>(n)});
  out.hbar_dual.assign(static_cast<std::size_t>(v_grid.size()), 0.0);
  Vec v(n);
  for (std::int64_t i = 0; i < v_grid.size(); ++i) {
    v_grid.point(i, v);
    double best = -std::numeric_limits<double>::infinity();
    std::int64_t arg = 0;
    for (std::int64_t j = 0; j < np; ++j) {
      const double val = dot({pts.data() + j * n, static_cast<std::size_t>(n)}, v) - t.hbar[j];
      if (val > best) {
        best = val;
        arg = j;
      }
    }
    if (t.P_grid.on_boundary(arg))
      throw Error(ErrorCode::DualRangeExceeded,
                  "dual argmax on the P-grid boundary at v=" + std::to_string(v[0]) +
                      "; widen the P grid or shrink the velocity grid");
    out.hbar_dual[i] = best;
  }
  const double vh = grid_convexity_violation(t.P_grid, t.hbar);
  const double vl = grid_convexity_violation(v_grid, out.hbar_dual);
  out.convexity_violation = std::max(vh, vl);
  out.convex = out.convexity_violation <= tol_convex;
  return out;
}

std::pair<double, double> dual_velocity_range(const EffectiveTable& t) {
  const auto& g = t.P_grid;
  require(g.res >= 3, "P grid too coarse for a dual range");
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> stride(g.dim);
  std::int64_t s = 1;
  for (int d = g.dim - 1; d >= 0; --d) {
    stride[d] = s;
    s *= g.res;
  }
  for (std::int64_t i = 0; i < g.size(); ++i)
    for (int d = 0; d < g.dim; ++d) {
      const auto k = (i / stride[d]) % g.res;
      // Slopes one cell inside each edge: velocities beyond them pull the argmax onto the edge.
      if (k == 1) lo = std::max(lo, (t.hbar[i + stride[d]] - t.hbar[i]) / g.step(d));
      if (k == g.res - 2) hi = std::min(hi, (t.hbar[i] - t.hbar[i - stride[d]]) / g.step(d));
    }
  return {lo, hi};
}

void write_hbar_csv(std::ostream& out, const EffectiveTable& t) {
  const int n = t.P_grid.dim;
  for (int d = 0; d < n; ++d) out << (n == 1 ? "P" : "P" + std::to_string(d + 1)) << ',';
  out << "hbar,method\n";
  Vec P(n);
  char buf[64];
  for (std::int64_t i = 0; i < t.P_grid.size(); ++i) {
    t.P_grid.point(i, P);
    for (double c : P) {
      std::snprintf(buf, sizeof buf, "%.17g,", c);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g,", t.hbar[i]);
    out << buf << (i < static_cast<std::int64_t>(t.method.size()) ? t.method[i] : "") << '\n';
  }
}

void write_lbar_csv(std::ostream& out, const EffectiveTable& t) {
  const int n = t.v_grid.dim;
  for (int d = 0; d < n; ++d) out << (n == 1 ? "v" : "v" + std::to_string(d + 1)) << ',';
  out << "lbar\n";
  Vec v(n);
  char buf[64];
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(t.hbar_dual.size()); ++i) {
    t.v_grid.point(i, v);
    for (double c : v) {
      std::snprintf(buf, sizeof buf, "%.17g,", c);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", t.hbar_dual[i]);
    out << buf;
  }
}

}  // namespace hjlab
