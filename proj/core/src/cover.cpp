#include "hjlab/cover.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>

#include "hjlab/error.hpp"

namespace hjlab {

namespace {

constexpr double kFdStep = 1e-6;

void check_basis(const FormBasis& forms) {
  require(!forms.empty(), "empty form basis");
  const int n = forms.front().dim();
  require(static_cast<int>(forms.size()) == n, "form basis must have one form per dimension");
  for (const auto& f : forms) require(f.dim() == n, "forms disagree on dimension");
}

}  // namespace

double ClosedOneForm::phi(std::span<const double> x) const {
  if (!potential) return 0.0;
  std::array<double, kMaxDim> w{};
  for (std::size_t d = 0; d < x.size(); ++d) w[d] = wrap_unit(x[d]);
  return potential({w.data(), x.size()});
}

void ClosedOneForm::value(std::span<const double> x, std::span<double> out) const {
  const int n = dim();
  for (int d = 0; d < n; ++d) out[d] = constant[d];
  if (!potential) return;
  std::array<double, kMaxDim> xp{};
  for (int d = 0; d < n; ++d) xp[d] = x[d];
  const std::span<const double> xs{xp.data(), static_cast<std::size_t>(n)};
  for (int d = 0; d < n; ++d) {
    xp[d] = x[d] + kFdStep;
    const double up = phi(xs);
    xp[d] = x[d] - kFdStep;
    const double dn = phi(xs);
    xp[d] = x[d];
    out[d] += (up - dn) / (2.0 * kFdStep);
  }
}

double ClosedOneForm::sup_norm(int res) const {
  const int n = dim();
  if (!potential) return norm2(constant);
  const CellGrid g{n, res};
  Vec x(n), w(n);
  double s = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    g.coords(i, x);
    value(x, w);
    s = std::max(s, norm2(w));
  }
  return s;
}

double ClosedOneForm::potential_bound(int res) const {
  if (!potential) return 0.0;
  const CellGrid g{dim(), res};
  Vec x(dim());
  double s = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    g.coords(i, x);
    s = std::max(s, std::abs(phi(x)));
  }
  return s;
}

FormBasis coordinate_forms(int dim) {
  require(dim >= 1 && dim <= kMaxDim, "form dimension out of range");
  FormBasis b(dim);
  for (int i = 0; i < dim; ++i) {
    b[i].constant.assign(dim, 0.0);
    b[i].constant[i] = 1.0;
  }
  return b;
}

void form_combination(const FormBasis& forms, std::span<const double> P, std::span<const double> x,
                      std::span<double> out) {
  const int n = static_cast<int>(out.size());
  std::fill(out.begin(), out.end(), 0.0);
  std::array<double, kMaxDim> w{};
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (P[i] == 0.0) continue;
    forms[i].value(x, {w.data(), static_cast<std::size_t>(n)});
    for (int d = 0; d < n; ++d) out[d] += P[i] * w[d];
  }
}

double potential_combination(const FormBasis& forms, std::span<const double> P,
                             std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < forms.size(); ++i)
    if (P[i] != 0.0 && forms[i].potential) s += P[i] * forms[i].phi(x);
  return s;
}

Vec period_map(const FormBasis& forms, std::span<const double> x, std::span<const double> x0) {
  check_basis(forms);
  Vec dx(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) dx[d] = x[d] - x0[d];
  Vec G(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i)
    G[i] = dot(forms[i].constant, dx) + forms[i].phi(x) - forms[i].phi(x0);
  return G;
}

Vec f_eps(double eps, std::span<const double> G) {
  require(eps > 0.0, "eps must be positive");
  Vec out(G.begin(), G.end());
  for (double& g : out) g *= eps;
  return out;
}

void scaled_period_map(const FormBasis& forms, double eps, std::span<const double> y, std::span<double> z) {
  std::array<double, kMaxDim> x{}, zero{};
  const auto n = y.size();
  for (std::size_t d = 0; d < n; ++d) x[d] = y[d] / eps;
  const Vec G = period_map(forms, {x.data(), n}, {zero.data(), n});
  for (std::size_t d = 0; d < n; ++d) z[d] = eps * G[d];
}

double lipschitz_bound_G(const FormBasis& forms, int res) {
  double s = 0.0;
  for (const auto& f : forms) s = std::max(s, f.sup_norm(res));
  return s;
}

std::vector<Vec> constant_matrix(const FormBasis& forms) {
  std::vector<Vec> m;
  for (const auto& f : forms) m.push_back(f.constant);
  return m;
}

CoverWindow preimage_window(double eps, std::span<const double> center, double r,
                            const FormBasis& forms, int cell_res) {
  require(eps > 0.0, "eps must be positive");
  require(r >= 0.0, "radius must be non-negative");
  require(cell_res >= 1, "cell_res must be positive");
  check_basis(forms);
  const int n = forms.front().dim();
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < n; ++d) A(i, d) = forms[i].constant[d];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(n - 1);
  if (!(smin > 1e-12 * std::max(1.0, smax)))
    throw Error(ErrorCode::DegenerateForms,
                "constant parts of the basis forms are linearly dependent (smallest singular value " +
                    std::to_string(smin) + ")");

  // |A (x - c)|_2 <= |A (x - c)|_1 <= r/eps + sum_i 2 sup|phi_i|.
  double beta = 0.0;
  for (const auto& f : forms) beta += 2.0 * f.potential_bound();
  Eigen::VectorXd target(n);
  for (int i = 0; i < n; ++i) target(i) = center[i] / eps;
  const Eigen::VectorXd c = svd.solve(target);
  const double R = (r / eps + beta) / smin;

  CoverWindow w;
  w.cell_res = cell_res;
  w.cells.lo.resize(n);
  w.cells.hi.resize(n);
  for (int d = 0; d < n; ++d) {
    w.cells.lo[d] = static_cast<std::int64_t>(std::floor(c(d) - R));
    w.cells.hi[d] = static_cast<std::int64_t>(std::floor(c(d) + R));
  }
  return w;
}

}  // namespace hjlab
