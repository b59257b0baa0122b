#include "hjlab/hamiltonian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hjlab/error.hpp"
#include "hjlab/numerics.hpp"
#include "hjlab/parallel.hpp"

namespace hjlab {

namespace {

using Small = std::array<double, kMaxDim>;

std::span<const double> wrapped(std::span<const double> x, Small& buf) {
  for (std::size_t d = 0; d < x.size(); ++d) buf[d] = wrap_unit(x[d]);
  return {buf.data(), x.size()};
}

std::int64_t ipow(std::int64_t b, int e) {
  std::int64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

// Coordinates of point `j` on the regular grid [-r, r]^dim with `res` points per axis.
void box_point(std::int64_t j, int dim, int res, double r, std::span<double> out) {
  const double h = res > 1 ? 2.0 * r / (res - 1) : 0.0;
  for (int d = dim - 1; d >= 0; --d) {
    out[d] = -r + static_cast<double>(j % res) * h;
    j /= res;
  }
}

bool on_box_boundary(std::int64_t j, int dim, int res) {
  for (int d = 0; d < dim; ++d) {
    const auto k = j % res;
    if (k == 0 || k == res - 1) return true;
    j /= res;
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// HamiltonianModel

HamiltonianModel HamiltonianModel::mechanical(int dim, ScalarField potential, VectorField drift) {
  require(dim >= 1 && dim <= kMaxDim, "model dimension out of range");
  require(static_cast<bool>(potential), "mechanical model needs a potential");
  HamiltonianModel m;
  m.dim_ = dim;
  m.mechanical_ = MechanicalForm{std::move(potential), std::move(drift)};
  const MechanicalForm form = *m.mechanical_;
  m.eval_ = [form, dim](std::span<const double> x, std::span<const double> p) {
    double h = 0.5 * dot(p, p) + form.potential(x);
    if (form.drift) {
      Small xi{};
      form.drift(x, {xi.data(), static_cast<std::size_t>(dim)});
      h += dot(p, {xi.data(), static_cast<std::size_t>(dim)});
    }
    return h;
  };
  return m;
}

HamiltonianModel HamiltonianModel::custom(int dim, Function h) {
  require(dim >= 1 && dim <= kMaxDim, "model dimension out of range");
  require(static_cast<bool>(h), "custom model needs an evaluator");
  HamiltonianModel m;
  m.dim_ = dim;
  m.eval_ = std::move(h);
  return m;
}

double HamiltonianModel::operator()(std::span<const double> x, std::span<const double> p) const {
  Small buf;
  return eval_(wrapped(x, buf), p);
}

HamiltonianModel::Fiber HamiltonianModel::fiber(std::span<const double> x) const {
  Fiber f;
  f.model_ = this;
  Small buf;
  auto xw = wrapped(x, buf);
  f.x_.assign(xw.begin(), xw.end());
  if (mechanical_) {
    f.fast_ = true;
    f.potential_ = mechanical_->potential(xw);
    f.drift_.assign(dim_, 0.0);
    if (mechanical_->drift) mechanical_->drift(xw, f.drift_);
  }
  return f;
}

double HamiltonianModel::Fiber::operator()(std::span<const double> p) const {
  if (fast_) return 0.5 * dot(p, p) + dot(p, drift_) + potential_;
  return model_->eval_(x_, p);
}

// ---------------------------------------------------------------------------
// Model audits

double convexity_violation(const HamiltonianModel& model, const ModelSampling& s) {
  const int n = model.dim();
  const CellGrid xg{n, s.x_res};
  const auto pc = ipow(s.p_res, n);
  // Cap the pair count by striding the second point.
  const std::int64_t stride = std::max<std::int64_t>(1, pc / 64);
  double worst = 0.0;
  Vec x(n), p1(n), p2(n), pm(n);
  for (std::int64_t ix = 0; ix < xg.size(); ++ix) {
    xg.coords(ix, x);
    const auto fib = model.fiber(x);
    for (std::int64_t i = 0; i < pc; ++i) {
      box_point(i, n, s.p_res, s.p_max, p1);
      const double h1 = fib(p1);
      for (std::int64_t j = i + 1; j < pc; j += stride) {
        box_point(j, n, s.p_res, s.p_max, p2);
        const double h2 = fib(p2);
        for (double lam : {0.25, 0.5, 0.75}) {
          for (int d = 0; d < n; ++d) pm[d] = lam * p1[d] + (1.0 - lam) * p2[d];
          const double excess = fib(pm) - (lam * h1 + (1.0 - lam) * h2);
          worst = std::max(worst, excess);
        }
      }
    }
  }
  return worst;
}

double superlinearity_offset(const HamiltonianModel& model, double slope, const ModelSampling& s) {
  const int n = model.dim();
  const CellGrid xg{n, s.x_res};
  const auto pc = ipow(s.p_res, n);
  double b = -std::numeric_limits<double>::infinity();
  Vec x(n), p(n);
  for (std::int64_t ix = 0; ix < xg.size(); ++ix) {
    xg.coords(ix, x);
    const auto fib = model.fiber(x);
    for (std::int64_t j = 0; j < pc; ++j) {
      box_point(j, n, s.p_res, s.p_max, p);
      b = std::max(b, slope * norm2(p) - fib(p));
    }
  }
  return b;
}

double sublevel_radius(const HamiltonianModel& model, double level, const ModelSampling& s) {
  const int n = model.dim();
  const CellGrid xg{n, s.x_res};
  const auto pc = ipow(s.p_res, n);
  double r = 0.0;
  Vec x(n), p(n);
  for (std::int64_t ix = 0; ix < xg.size(); ++ix) {
    xg.coords(ix, x);
    const auto fib = model.fiber(x);
    for (std::int64_t j = 0; j < pc; ++j) {
      box_point(j, n, s.p_res, s.p_max, p);
      if (fib(p) <= level) r = std::max(r, norm2(p));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// LagrangianTable

LagrangianTable::LagrangianTable(int dim, int x_res, double v_max, int v_res)
    : dim_(dim), x_res_(x_res), v_max_(v_max), v_res_(v_res) {
  require(dim >= 1 && dim <= kMaxDim, "table dimension out of range");
  require(x_res >= 1 && v_res >= 3 && v_max > 0.0, "table resolutions must be positive");
  x_count_ = ipow(x_res, dim);
  v_count_ = ipow(v_res, dim);
  values_.assign(static_cast<std::size_t>(x_count_ * v_count_), 0.0);
  dv_.assign(values_.size() * static_cast<std::size_t>(dim), 0.0);
  energy_.assign(values_.size(), 0.0);
}

double LagrangianTable::velocity(std::int64_t iv, int axis) const {
  for (int d = dim_ - 1; d > axis; --d) iv /= v_res_;
  return -v_max_ + static_cast<double>(iv % v_res_) * dv();
}

void LagrangianTable::velocity(std::int64_t iv, std::span<double> v) const {
  box_point(iv, dim_, v_res_, v_max_, v);
}

void LagrangianTable::position(std::int64_t ix, std::span<double> x) const {
  CellGrid{dim_, x_res_}.coords(ix, x);
}

double LagrangianTable::speed(std::int64_t iv) const {
  Small v{};
  velocity(iv, {v.data(), static_cast<std::size_t>(dim_)});
  return norm2({v.data(), static_cast<std::size_t>(dim_)});
}

double LagrangianTable::Lv_norm(std::int64_t ix, std::int64_t iv) const {
  return norm2({dv_.data() + (ix * v_count_ + iv) * dim_, static_cast<std::size_t>(dim_)});
}

double LagrangianTable::interpolate(const std::vector<double>& data, std::span<const double> x,
                                    std::span<const double> v) const {
  std::array<std::int64_t, kMaxDim> xi0{}, xi1{}, vi0{};
  std::array<double, kMaxDim> xw{}, vw{};
  const double h = dv();
  for (int d = 0; d < dim_; ++d) {
    if (!(std::abs(v[d]) <= v_max_ * (1.0 + 1e-12)))
      throw Error(ErrorCode::VelocityOutOfWindow,
                  "|v| = " + std::to_string(std::abs(v[d])) + " exceeds table window " +
                      std::to_string(v_max_));
    const double sx = wrap_unit(x[d]) * x_res_;
    auto i0 = static_cast<std::int64_t>(std::floor(sx));
    xw[d] = sx - static_cast<double>(i0);
    xi0[d] = floor_mod(i0, x_res_);
    xi1[d] = floor_mod(i0 + 1, x_res_);
    const double sv = (v[d] + v_max_) / h;
    auto j0 = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(sv)), 0, v_res_ - 2);
    vi0[d] = j0;
    vw[d] = std::clamp(sv - static_cast<double>(j0), 0.0, 1.0);
  }
  double acc = 0.0;
  const int corners = 1 << dim_;
  for (int cx = 0; cx < corners; ++cx) {
    double wx = 1.0;
    std::int64_t fx = 0;
    for (int d = 0; d < dim_; ++d) {
      const bool hi = (cx >> d) & 1;
      wx *= hi ? xw[d] : 1.0 - xw[d];
      fx = fx * x_res_ + (hi ? xi1[d] : xi0[d]);
    }
    if (wx == 0.0) continue;
    for (int cv = 0; cv < corners; ++cv) {
      double w = wx;
      std::int64_t fv = 0;
      for (int d = 0; d < dim_; ++d) {
        const bool hi = (cv >> d) & 1;
        w *= hi ? vw[d] : 1.0 - vw[d];
        fv = fv * v_res_ + vi0[d] + (hi ? 1 : 0);
      }
      if (w != 0.0) acc += w * data[static_cast<std::size_t>(fx * v_count_ + fv)];
    }
  }
  return acc;
}

double LagrangianTable::value(std::span<const double> x, std::span<const double> v) const {
  return interpolate(values_, x, v);
}

double LagrangianTable::energy(std::span<const double> x, std::span<const double> v) const {
  return interpolate(energy_, x, v);
}

void LagrangianTable::finalize_derivatives() {
  const double h = dv();
  std::array<std::int64_t, kMaxDim> stride{};
  std::int64_t s = 1;
  for (int d = dim_ - 1; d >= 0; --d) {
    stride[d] = s;
    s *= v_res_;
  }
  Small v{};
  const std::span<double> vs{v.data(), static_cast<std::size_t>(dim_)};
  for (std::int64_t ix = 0; ix < x_count_; ++ix) {
    const double* row = values_.data() + ix * v_count_;
    for (std::int64_t iv = 0; iv < v_count_; ++iv) {
      velocity(iv, vs);
      double vdotlv = 0.0;
      for (int d = 0; d < dim_; ++d) {
        const auto k = (iv / stride[d]) % v_res_;
        double g;
        if (k == 0) g = (row[iv + stride[d]] - row[iv]) / h;
        else if (k == v_res_ - 1) g = (row[iv] - row[iv - stride[d]]) / h;
        else g = (row[iv + stride[d]] - row[iv - stride[d]]) / (2.0 * h);
        dv_[(ix * v_count_ + iv) * dim_ + d] = g;
        vdotlv += v[d] * g;
      }
      energy_[ix * v_count_ + iv] = vdotlv - row[iv];
    }
  }
}

void LagrangianTable::write_csv(std::ostream& out) const {
  out << "# dim=" << dim_ << " x_res=" << x_res_ << " v_max=" << std::setprecision(17) << v_max_
      << " v_res=" << v_res_ << "\n";
  out << "x_index,v_index,L";
  if (dim_ == 1) out << ",L_v";
  else
    for (int d = 0; d < dim_; ++d) out << ",L_v" << d + 1;
  out << ",E\n";
  for (std::int64_t ix = 0; ix < x_count_; ++ix)
    for (std::int64_t iv = 0; iv < v_count_; ++iv) {
      out << ix << ',' << iv << ',' << L(ix, iv);
      for (int d = 0; d < dim_; ++d) out << ',' << Lv(ix, iv, d);
      out << ',' << E(ix, iv) << '\n';
    }
}

LagrangianTable LagrangianTable::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw Error(ErrorCode::ParseError, "table csv: missing '# dim=...' metadata line");
  int dim = 0, x_res = 0, v_res = 0;
  double v_max = 0.0;
  {
    std::istringstream meta(line.substr(2));
    std::string tok;
    while (meta >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const auto key = tok.substr(0, eq);
      const auto val = tok.substr(eq + 1);
      if (key == "dim") dim = std::stoi(val);
      else if (key == "x_res") x_res = std::stoi(val);
      else if (key == "v_max") v_max = std::stod(val);
      else if (key == "v_res") v_res = std::stoi(val);
    }
  }
  LagrangianTable t(dim, x_res, v_max, v_res);
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "table csv: missing header row");
  std::int64_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != static_cast<std::size_t>(4 + dim))
      throw Error(ErrorCode::ParseError, "table csv: bad column count on data row " + std::to_string(rows + 1));
    const auto ix = static_cast<std::int64_t>(cells[0]);
    const auto iv = static_cast<std::int64_t>(cells[1]);
    if (ix < 0 || ix >= t.x_count_ || iv < 0 || iv >= t.v_count_)
      throw Error(ErrorCode::ParseError, "table csv: index out of range");
    const auto k = ix * t.v_count_ + iv;
    t.values_[k] = cells[2];
    for (int d = 0; d < dim; ++d) t.dv_[k * dim + d] = cells[3 + d];
    t.energy_[k] = cells[3 + dim];
    ++rows;
  }
  if (rows != t.x_count_ * t.v_count_)
    throw Error(ErrorCode::ParseError, "table csv: expected " + std::to_string(t.x_count_ * t.v_count_) +
                                           " rows, found " + std::to_string(rows));
  return t;
}

// ---------------------------------------------------------------------------
// Legendre dual

LagrangianTable legendre_dual(const HamiltonianModel& model, int x_res, double v_max, int v_res,
                              const PSearch& search) {
  const int n = model.dim();
  require(search.p_res >= 3 && search.p_max > 0.0 && search.tol > 0.0, "bad p search window");
  LagrangianTable table(n, x_res, v_max, v_res);
  const auto pc = ipow(search.p_res, n);
  const double dp = 2.0 * search.p_max / (search.p_res - 1);
  std::vector<double> pgrid(static_cast<std::size_t>(pc * n));
  for (std::int64_t j = 0; j < pc; ++j) box_point(j, n, search.p_res, search.p_max, {pgrid.data() + j * n, static_cast<std::size_t>(n)});

  parallel_for(table.x_count(), [&](std::int64_t begin, std::int64_t end) {
    Vec x(n), v(n), p(n), hp(static_cast<std::size_t>(pc));
    for (std::int64_t ix = begin; ix < end; ++ix) {
      table.position(ix, x);
      const auto fib = model.fiber(x);
      for (std::int64_t j = 0; j < pc; ++j) hp[j] = fib({pgrid.data() + j * n, static_cast<std::size_t>(n)});
      for (std::int64_t iv = 0; iv < table.v_count(); ++iv) {
        table.velocity(iv, v);
        double best = -std::numeric_limits<double>::infinity();
        std::int64_t jbest = 0;
        for (std::int64_t j = 0; j < pc; ++j) {
          const double* pj = pgrid.data() + j * n;
          double val = -hp[j];
          for (int d = 0; d < n; ++d) val += pj[d] * v[d];
          if (val > best) {
            best = val;
            jbest = j;
          }
        }
        if (on_box_boundary(jbest, n, search.p_res)) {
          std::ostringstream msg;
          msg << "argmax p on the search boundary at x=" << x[0] << " v=" << v[0]
              << "; widen p_max (" << search.p_max << ") or shrink v_max (" << v_max << ")";
          throw Error(ErrorCode::SearchWindowTooSmall, msg.str());
        }
        std::copy_n(pgrid.data() + jbest * n, n, p.begin());
        const Vec center = p;
        auto objective = [&](std::span<const double> q) { return dot(q, v) - fib(q); };
        double refined = best;
        for (int cycle = 0; cycle < (n == 1 ? 1 : 40); ++cycle) {
          const double before = refined;
          for (int d = 0; d < n; ++d) {
            auto line = [&](double t) {
              const double keep = p[d];
              p[d] = t;
              const double val = objective(p);
              p[d] = keep;
              return val;
            };
            auto [arg, val] = golden_section_max(line, center[d] - dp, center[d] + dp, search.tol);
            if (val > refined) {
              refined = val;
              p[d] = arg;
            }
          }
          if (refined - before <= 1e-15 * (1.0 + std::abs(refined))) break;
        }
        table.L(ix, iv) = std::max(best, refined);
      }
    }
  });
  table.finalize_derivatives();
  return table;
}

double scaled_lagrangian(const LagrangianTable& table, double eps, std::span<const double> x,
                         std::span<const double> v) {
  require(eps > 0.0, "eps must be positive");
  Small w{};
  for (std::size_t d = 0; d < v.size(); ++d) w[d] = eps * v[d];
  return table.value(x, {w.data(), v.size()});
}

double energy_scaled(const LagrangianTable& table, double eps, std::span<const double> x,
                     std::span<const double> v) {
  require(eps > 0.0, "eps must be positive");
  Small w{};
  for (std::size_t d = 0; d < v.size(); ++d) w[d] = eps * v[d];
  return table.energy(x, {w.data(), v.size()});
}

// ---------------------------------------------------------------------------
// Solver constants

namespace {

struct TableScan {
  const LagrangianTable& t;

  template <class F>
  void each(F&& f) const {
    for (std::int64_t ix = 0; ix < t.x_count(); ++ix)
      for (std::int64_t iv = 0; iv < t.v_count(); ++iv) f(ix, iv);
  }

  bool on_edge(std::int64_t iv) const { return on_box_boundary(iv, t.dim(), t.v_res()); }

  double sup_abs_l0() const {
    Vec x(t.dim()), zero(t.dim(), 0.0);
    double s = 0.0;
    for (std::int64_t ix = 0; ix < t.x_count(); ++ix) {
      t.position(ix, x);
      s = std::max(s, std::abs(t.value(x, zero)));
    }
    return s;
  }

  // An eighth of the largest second difference of `f` along any v or x axis.
  template <class F>
  double interpolation_margin(F&& f) const {
    const int n = t.dim();
    double worst = 0.0;
    std::vector<std::int64_t> vstride(n), xstride(n);
    std::int64_t s = 1, q = 1;
    for (int d = n - 1; d >= 0; --d) {
      vstride[d] = s;
      s *= t.v_res();
      xstride[d] = q;
      q *= t.x_res();
    }
    each([&](std::int64_t ix, std::int64_t iv) {
      for (int d = 0; d < n; ++d) {
        const auto k = (iv / vstride[d]) % t.v_res();
        if (k > 0 && k < t.v_res() - 1)
          worst = std::max(worst, std::abs(f(ix, iv + vstride[d]) - 2.0 * f(ix, iv) + f(ix, iv - vstride[d])));
        if (t.x_res() >= 3) {
          const auto kx = (ix / xstride[d]) % t.x_res();
          const auto up = ix + (kx == t.x_res() - 1 ? -(t.x_res() - 1) : 1) * xstride[d];
          const auto dn = ix + (kx == 0 ? (t.x_res() - 1) : -1) * xstride[d];
          worst = std::max(worst, std::abs(f(up, iv) - 2.0 * f(ix, iv) + f(dn, iv)));
        }
      }
    });
    return worst / 8.0 + 1e-9;
  }
};

}  // namespace

SolverConstants derive_constants(const HamiltonianModel& model, const LagrangianTable& table, double K) {
  require(model.dim() == table.dim(), "model/table dimension mismatch");
  require(K >= 0.0, "K must be non-negative");
  const TableScan scan{table};
  const double dv = table.dv();
  auto lval = [&](std::int64_t ix, std::int64_t iv) { return table.L(ix, iv); };
  auto eval = [&](std::int64_t ix, std::int64_t iv) { return table.E(ix, iv); };
  auto lvn = [&](std::int64_t ix, std::int64_t iv) { return table.Lv_norm(ix, iv); };
  const double margin_l = scan.interpolation_margin(lval);
  const double margin_e = scan.interpolation_margin(eval);
  const double margin_lv = scan.interpolation_margin(lvn);
  const double l0 = scan.sup_abs_l0();
  auto strict = [](double v) { return v + 1e-9 * (1.0 + std::abs(v)); };

  // max over the table of slope|v| - L; the argmax must be interior to certify.
  auto offset = [&](double slope, const char* name) {
    double best = -std::numeric_limits<double>::infinity();
    bool edge = false;
    scan.each([&](std::int64_t ix, std::int64_t iv) {
      const double val = slope * table.speed(iv) - table.L(ix, iv);
      if (val > best) {
        best = val;
        edge = scan.on_edge(iv);
      }
    });
    if (edge)
      throw Error(ErrorCode::TableWindowTooSmall,
                  std::string("superlinearity offset ") + name + " attained on the velocity window edge");
    return best + margin_l;
  };

  SolverConstants c;
  c.K = K;
  c.A = K + 1.0;
  c.B = offset(2.0 * c.A, "B");
  c.a1 = strict((c.B + l0) / c.A);

  double emax = -std::numeric_limits<double>::infinity();
  scan.each([&](std::int64_t ix, std::int64_t iv) {
    if (table.speed(iv) <= c.a1 + dv) emax = std::max(emax, table.E(ix, iv));
  });
  c.k0 = emax + margin_e;

  double vmax_low = 0.0;
  bool edge = false;
  scan.each([&](std::int64_t ix, std::int64_t iv) {
    if (table.E(ix, iv) <= c.k0) {
      vmax_low = std::max(vmax_low, table.speed(iv));
      edge = edge || scan.on_edge(iv);
    }
  });
  c.a0 = vmax_low + dv;
  if (edge || c.a0 > table.v_max())
    throw Error(ErrorCode::TableWindowTooSmall,
                "energy sublevel E <= k0 reaches the velocity window; a0 cannot be certified (v_max=" +
                    std::to_string(table.v_max()) + ")");
  if (4.0 * c.a0 > table.v_max())
    throw Error(ErrorCode::TableWindowTooSmall,
                "b2 needs |L_v| on |w| <= 4 a0 = " + std::to_string(4.0 * c.a0) + " but v_max = " +
                    std::to_string(table.v_max()));

  double lv = 0.0;
  scan.each([&](std::int64_t ix, std::int64_t iv) {
    if (table.speed(iv) <= 4.0 * c.a0) lv = std::max(lv, table.Lv_norm(ix, iv));
  });
  c.b2 = std::max(K + 1.0, lv + margin_lv);
  c.c2 = offset(c.b2, "c2");
  c.c1 = std::max(c.c2, l0);
  c.Q = std::max(c.b2, c.c1);
  return c;
}

ConstantsAudit audit_constants(const SolverConstants& c, const LagrangianTable& table) {
  ConstantsAudit audit;
  audit.worst = -std::numeric_limits<double>::infinity();
  const TableScan scan{table};
  // Strict inequalities fail at equality; non-strict ones only beyond it.
  auto check = [&](double violation, const std::string& what, bool strict = true) {
    audit.worst = std::max(audit.worst, violation);
    if (strict ? violation >= 0.0 : violation > 0.0) audit.failures.push_back(what + " (violation " + std::to_string(violation) + ")");
  };
  const double l0 = scan.sup_abs_l0();
  check(c.K - c.A, "A > K");
  check(c.B - c.A * c.a1 + l0, "A a1 - B > sup|L(x,0)|");
  check(c.K - c.b2, "b2 > K");
  check(c.c2 - c.c1, "c1 >= c2", false);
  double lin = -1.0, e_low = -1.0, e_high = -1.0, lv = -1.0, lin2 = -1.0;
  scan.each([&](std::int64_t ix, std::int64_t iv) {
    const double s = table.speed(iv);
    const double l = table.L(ix, iv);
    const double e = table.E(ix, iv);
    lin = std::max(lin, 2.0 * c.A * s - c.B - l);
    lin2 = std::max(lin2, c.b2 * s - c.c2 - l);
    if (s <= c.a1) e_low = std::max(e_low, e - c.k0);
    if (s >= c.a0) e_high = std::max(e_high, c.k0 - e);
    if (s <= 4.0 * c.a0) lv = std::max(lv, table.Lv_norm(ix, iv) - c.b2);
  });
  check(lin, "L > 2A|v| - B");
  check(e_low, "|v| <= a1 => E < k0");
  check(e_high, "|v| >= a0 => E > k0");
  check(lv, "|w| <= 4 a0 => |L_v| < b2");
  check(lin2, "L > b2|v| - c2");
  return audit;
}

// ---------------------------------------------------------------------------
// Quadratic truncation

HamiltonianModel quadratic_truncation(const HamiltonianModel& model, double r0, double tol_convex) {
  require(r0 > 0.0, "R0 must be positive");
  const int n = model.dim();
  if (model.is_mechanical()) {
    HamiltonianModel out = model;
    out.truncation_ = Truncation{r0};
    return out;
  }

  // Already quadratic beyond R0 (|p|^2/2 + constant)? Then the output is the input.
  {
    const CellGrid xg{n, 8};
    Vec x(n), p(n);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::int64_t ix = 0; ix < xg.size(); ++ix) {
      xg.coords(ix, x);
      for (int k = 0; k < 16; ++k) {
        const double r = r0 * (1.0 + k / 5.0);
        for (int d = 0; d < n; ++d) {
          std::fill(p.begin(), p.end(), 0.0);
          for (double sgn : {-1.0, 1.0}) {
            p[d] = sgn * r;
            const double gap = model(x, p) - 0.5 * r * r;
            lo = std::min(lo, gap);
            hi = std::max(hi, gap);
          }
        }
      }
    }
    if (hi - lo <= 1e-12 * (1.0 + std::abs(hi))) {
      HamiltonianModel out = model;
      out.truncation_ = Truncation{r0};
      return out;
    }
  }

  const HamiltonianModel base = model;
  auto blended = [base, r0, n](std::span<const double> x, std::span<const double> p) {
    const double r = norm2(p);
    if (r <= r0) return base(x, p);
    Small theta{}, q{};
    for (int d = 0; d < n; ++d) theta[d] = p[d] / r;
    auto ray = [&](double s) {
      for (int d = 0; d < n; ++d) q[d] = s * theta[d];
      return base(x, {q.data(), static_cast<std::size_t>(n)});
    };
    const double step = 1e-5 * r0;
    const double h0 = ray(r0);
    const double slope0 = (ray(r0 + step) - ray(r0 - step)) / (2.0 * step);
    const double slope_q = 2.0 * r0;  // d/dr of r^2/2 at 2 R0
    const double t = (r - r0) / r0;
    if (t <= 1.0)
      return h0 + slope0 * (r - r0) + (slope_q - slope0) * r0 * smoothstep_integral(t);
    const double at_2r0 = h0 + slope0 * r0 + (slope_q - slope0) * r0 * 0.5;
    return at_2r0 + 0.5 * (r * r - 4.0 * r0 * r0);
  };
  HamiltonianModel out = HamiltonianModel::custom(n, blended);
  out.truncation_ = Truncation{r0};

  ModelSampling s;
  s.x_res = n == 1 ? 16 : 6;
  s.p_max = 3.0 * r0;
  s.p_res = n == 1 ? 61 : 13;
  const double viol = convexity_violation(out, s);
  if (viol > tol_convex)
    throw Error(ErrorCode::NonConvexBlend, "blend violates convexity by " + std::to_string(viol) +
                                               " at R0=" + std::to_string(r0));
  return out;
}

}  // namespace hjlab
