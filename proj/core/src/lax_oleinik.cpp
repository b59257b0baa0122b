#include "hjlab/lax_oleinik.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hjlab/error.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

void ValueField::point(std::int64_t flat, std::span<double> y) const {
  std::int64_t idx[kMaxDim];
  box.unflat(flat, {idx, static_cast<std::size_t>(dim())});
  const double h = spacing();
  for (int d = 0; d < dim(); ++d) y[d] = static_cast<double>(idx[d]) * h;
}

IndexBox point_box(const CoverWindow& w) {
  IndexBox b;
  for (int d = 0; d < w.cells.dim(); ++d) {
    b.lo.push_back(w.cells.lo[d] * w.cell_res);
    b.hi.push_back((w.cells.hi[d] + 1) * w.cell_res);
  }
  return b;
}

ValueField sample_field(double eps, int cell_res, const IndexBox& box, double margin,
                        const ScalarField& f) {
  require(eps > 0.0 && cell_res >= 1, "bad field resolution");
  require(box.size() > 0, "empty field box");
  ValueField u;
  u.eps = eps;
  u.cell_res = cell_res;
  u.box = box;
  u.margin = margin;
  u.values.resize(static_cast<std::size_t>(box.size()));
  parallel_for(box.size(), [&](std::int64_t b, std::int64_t e) {
    Vec y(box.dim());
    for (std::int64_t i = b; i < e; ++i) {
      u.point(i, y);
      u.values[i] = f(y);
    }
  });
  return u;
}

StepConfig make_step_config(const SolverConstants& c, double eps, int cell_res, double dt) {
  require(eps > 0.0 && dt > 0.0 && cell_res >= 1, "bad step configuration");
  const double h = eps / cell_res;
  const double r = std::ceil(c.a0 * dt / h * (1.0 - 1e-12));
  StepConfig cfg;
  cfg.eps = eps;
  cfg.dt = dt;
  cfg.search_radius = std::max(1.0, r) * h;
  cfg.constants = c;
  return cfg;
}

LaxOperator::LaxOperator(const StepConfig& cfg, const LagrangianTable& table, int cell_res, int dim)
    : cfg_(cfg), cell_res_(cell_res), dim_(dim) {
  require(dim == table.dim(), "field/table dimension mismatch");
  require(cfg.dt > 0.0 && cfg.eps > 0.0, "dt and eps must be positive");
  const double h = cfg.eps / cell_res;
  radius_ = static_cast<std::int64_t>(std::llround(cfg.search_radius / h));
  require(std::abs(static_cast<double>(radius_) * h - cfg.search_radius) <= 1e-9 * h,
          "search radius must be a whole number of grid spacings");
  if (cfg.search_radius < cfg.constants.a0 * cfg.dt * (1.0 - 1e-12))
    throw Error(ErrorCode::InvalidArgument, "search radius below a0 * dt");
  if (cfg.search_radius / cfg.dt > table.v_max() * (1.0 + 1e-12))
    throw Error(ErrorCode::VelocityOutOfWindow,
                "search speed " + std::to_string(cfg.search_radius / cfg.dt) +
                    " exceeds the Lagrangian table window " + std::to_string(table.v_max()));
  offsets_ = ball_offsets(dim, radius_);
  const CellGrid cell{dim, cell_res};
  const auto nres = cell.size();
  const auto noff = static_cast<std::int64_t>(offsets_.size());
  kernel_.resize(static_cast<std::size_t>(nres * noff));
  parallel_for(nres, [&](std::int64_t b, std::int64_t e) {
    Vec x(dim), v(dim);
    for (std::int64_t r = b; r < e; ++r) {
      cell.coords(r, x);
      for (std::int64_t j = 0; j < noff; ++j) {
        for (int d = 0; d < dim; ++d) v[d] = static_cast<double>(offsets_[j][d]) * h / cfg.dt;
        kernel_[r * noff + j] = cfg.dt * table.value(x, v);
      }
    }
  });
}

ValueField LaxOperator::step(const ValueField& u) const {
  require(u.dim() == dim_ && u.cell_res == cell_res_, "field does not match the operator grid");
  require(std::abs(u.eps - cfg_.eps) <= 1e-15 * cfg_.eps, "field eps does not match the operator");
  const double new_margin = u.margin - cfg_.search_radius;
  if (new_margin < -1e-12 * (1.0 + cfg_.search_radius))
    throw Error(ErrorCode::WindowExhausted,
                "margin " + std::to_string(u.margin) + " cannot absorb search radius " +
                    std::to_string(cfg_.search_radius));
  ValueField out;
  out.eps = u.eps;
  out.cell_res = u.cell_res;
  out.box = u.box.shrunk(radius_);
  out.time = u.time + cfg_.dt;
  out.margin = std::max(0.0, new_margin);
  if (out.box.size() <= 0) throw Error(ErrorCode::WindowExhausted, "field box exhausted by the stencil");
  out.values.resize(static_cast<std::size_t>(out.box.size()));

  const int n = dim_;
  IVec stride(n);
  {
    std::int64_t s = 1;
    for (int d = n - 1; d >= 0; --d) {
      stride[d] = s;
      s *= u.box.extent(d);
    }
  }
  const auto noff = static_cast<std::int64_t>(offsets_.size());
  std::vector<std::int64_t> delta(static_cast<std::size_t>(noff));
  for (std::int64_t j = 0; j < noff; ++j) {
    std::int64_t f = 0;
    for (int d = 0; d < n; ++d) f += offsets_[j][d] * stride[d];
    delta[j] = f;
  }

  const double* in = u.values.data();
  parallel_for(out.box.size(), [&](std::int64_t b, std::int64_t e) {
    std::int64_t idx[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
    for (std::int64_t i = b; i < e; ++i) {
      out.box.unflat(i, ks);
      std::int64_t res = 0, base = 0;
      for (int d = 0; d < n; ++d) {
        res = res * cell_res_ + floor_mod(idx[d], cell_res_);
        base += (idx[d] - u.box.lo[d]) * stride[d];
      }
      const double* kern = kernel_.data() + res * noff;
      // y = x - s, so walking s downwards visits y in increasing order and the
      // strict comparison keeps the lexicographically smallest minimizer.
      double best = std::numeric_limits<double>::infinity();
      for (std::int64_t j = noff - 1; j >= 0; --j) {
        const double val = in[base - delta[j]] + kern[j];
        if (val < best) best = val;
      }
      out.values[i] = best;
    }
  });
  return out;
}

ValueField lax_step(const ValueField& u, const StepConfig& cfg, const LagrangianTable& table) {
  return LaxOperator(cfg, table, u.cell_res, u.dim()).step(u);
}

std::int64_t step_count(double T, double dt) {
  require(T >= 0.0 && dt > 0.0, "horizon must be non-negative and dt positive");
  const auto m = static_cast<std::int64_t>(std::llround(T / dt));
  require(std::abs(static_cast<double>(m) * dt - T) <= 1e-9 * std::max(1.0, T),
          "horizon " + std::to_string(T) + " is not a multiple of dt " + std::to_string(dt));
  return m;
}

std::vector<ValueField> solve(const ValueField& f, double T, const StepConfig& cfg,
                              const LagrangianTable& table, std::ostream* log) {
  const auto m = step_count(T, cfg.dt);
  const LaxOperator op(cfg, table, f.cell_res, f.dim());
  std::vector<ValueField> out;
  out.reserve(static_cast<std::size_t>(m + 1));
  out.push_back(f);
  for (std::int64_t k = 1; k <= m; ++k) {
    out.push_back(op.step(out.back()));
    out.back().time = f.time + static_cast<double>(k) * cfg.dt;
    if (log) {
      const auto& v = out.back().values;
      const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
      *log << "step " << k << " t=" << out.back().time << " min=" << *lo << " max=" << *hi
           << " lip=" << space_lipschitz(out.back()) << "\n";
    }
  }
  return out;
}

double space_lipschitz(const ValueField& u) {
  const int n = u.dim();
  const double h = u.spacing();
  double worst = 0.0;
  std::int64_t idx[kMaxDim], nb[kMaxDim];
  const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(n)};
  const std::span<std::int64_t> ns{nb, static_cast<std::size_t>(n)};
  for (std::int64_t i = 0; i < u.size(); ++i) {
    u.box.unflat(i, ks);
    double s2 = 0.0;
    bool any = false;
    for (int d = 0; d < n; ++d) {
      std::copy_n(idx, n, nb);
      if (idx[d] < u.box.hi[d]) nb[d] += 1;
      else if (idx[d] > u.box.lo[d]) nb[d] -= 1;
      else continue;
      const double g = (u.at(ns) - u.values[i]) / h;
      s2 += g * g;
      any = true;
    }
    if (any) worst = std::max(worst, std::sqrt(s2));
  }
  return worst;
}

LipschitzCertificate certify_lipschitz(std::span<const ValueField> fields, const SolverConstants& c,
                                       double tol_lip) {
  require(fields.size() >= 2, "certificate needs at least two time slices");
  LipschitzCertificate cert;
  cert.space_bound = c.b2 * (1.0 + tol_lip);
  cert.time_bound = c.c1 * (1.0 + tol_lip);
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const double s = space_lipschitz(fields[k]);
    if (s > cert.space) {
      cert.space = s;
      if (s > cert.space_bound && cert.pass) {
        cert.pass = false;
        cert.violation = "space constant " + std::to_string(s) + " at t=" + std::to_string(fields[k].time);
      }
    }
    if (k == 0) continue;
    const auto& a = fields[k - 1];
    const auto& b = fields[k];
    const double dt = b.time - a.time;
    const IndexBox common = intersect(a.box, b.box);
    std::int64_t idx[kMaxDim];
    const std::span<std::int64_t> ks{idx, static_cast<std::size_t>(a.dim())};
    for (std::int64_t i = 0; i < common.size(); ++i) {
      common.unflat(i, ks);
      const double q = std::abs(b.at(ks) - a.at(ks)) / dt;
      if (q > cert.time) {
        cert.time = q;
        if (q > cert.time_bound && cert.pass) {
          cert.pass = false;
          cert.violation = "time constant " + std::to_string(q) + " between t=" + std::to_string(a.time) +
                           " and t=" + std::to_string(b.time);
        }
      }
    }
  }
  return cert;
}

void write_field_csv(std::ostream& out, std::span<const ValueField> fields) {
  if (fields.empty()) return;
  const int n = fields.front().dim();
  for (int d = 0; d < n; ++d) out << (n == 1 ? "y" : "y" + std::to_string(d + 1)) << ',';
  out << "t,value\n";
  Vec y(n);
  char buf[64];
  for (const auto& u : fields)
    for (std::int64_t i = 0; i < u.size(); ++i) {
      u.point(i, y);
      for (int d = 0; d < n; ++d) {
        std::snprintf(buf, sizeof buf, "%.17g,", y[d]);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", u.time, u.values[i]);
      out << buf;
    }
}

}  // namespace hjlab
