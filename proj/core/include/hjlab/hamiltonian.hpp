#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjlab/grid.hpp"

namespace hjlab {

/// Periodic scalar field on the unit cell.
using ScalarField = std::function<double(std::span<const double> x)>;
/// Periodic vector field on the unit cell; writes `dim` components to `out`.
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

/// The data of H(x,p) = |p|^2/2 + p.xi(x) + V(x).
struct MechanicalForm {
  ScalarField potential;
  VectorField drift;  // empty means xi == 0
};

struct Truncation {
  double r0 = 0.0;
};

/// Tonelli Hamiltonian on the flat cell [0,1)^n. Evaluation always reduces x
/// to the cell first, so H(x + e_i, p) and H(x, p) read the same sample.
class HamiltonianModel {
 public:
  using Function = std::function<double(std::span<const double> x, std::span<const double> p)>;

  static HamiltonianModel mechanical(int dim, ScalarField potential, VectorField drift = {});
  static HamiltonianModel custom(int dim, Function h);

  int dim() const { return dim_; }
  double operator()(std::span<const double> x, std::span<const double> p) const;

  bool is_mechanical() const { return mechanical_.has_value(); }
  const std::optional<MechanicalForm>& mechanical_form() const { return mechanical_; }
  const std::optional<Truncation>& truncation() const { return truncation_; }

  /// H(x, .) at a frozen base point, with the x-dependent parts evaluated once.
  class Fiber {
   public:
    double operator()(std::span<const double> p) const;

   private:
    friend class HamiltonianModel;
    const HamiltonianModel* model_ = nullptr;
    Vec x_;
    double potential_ = 0.0;
    Vec drift_;
    bool fast_ = false;
  };
  Fiber fiber(std::span<const double> x) const;

 private:
  friend HamiltonianModel quadratic_truncation(const HamiltonianModel&, double, double);

  int dim_ = 1;
  Function eval_;
  std::optional<MechanicalForm> mechanical_;
  std::optional<Truncation> truncation_;
};

/// Sampling used by the model audits: `x_res` points per axis on the cell,
/// `p_res` points per axis on [-p_max, p_max]^n.
struct ModelSampling {
  int x_res = 16;
  double p_max = 4.0;
  int p_res = 17;
};

/// Largest violation of H(x, l p1 + (1-l) p2) <= l H(x,p1) + (1-l) H(x,p2)
/// over sampled x, pairs (p1, p2) and l in {1/4, 1/2, 3/4}. Zero when convex.
double convexity_violation(const HamiltonianModel& model, const ModelSampling& s);

/// Smallest B with H(x,p) >= A|p| - B on the sampled grid.
double superlinearity_offset(const HamiltonianModel& model, double slope, const ModelSampling& s);

/// Largest |p| among sampled points with H(x,p) <= level; used to audit the
/// containment [H <= h0] in [|p| <= R0].
double sublevel_radius(const HamiltonianModel& model, double level, const ModelSampling& s);

struct PSearch {
  double p_max = 40.0;
  int p_res = 801;
  double tol = 1e-6;  // tol_legendre: final bracket width in p
};

/// Sampled Legendre dual L(x,v) = sup_p p.v - H(x,p) on the grid
/// x in {k / x_res}^n, v in [-v_max, v_max]^n with v_res points per axis.
/// Alongside L it stores the central-difference velocity gradient L_v and the
/// energy E = v.L_v - L.
class LagrangianTable {
 public:
  LagrangianTable() = default;
  LagrangianTable(int dim, int x_res, double v_max, int v_res);

  int dim() const { return dim_; }
  int x_res() const { return x_res_; }
  int v_res() const { return v_res_; }
  double v_max() const { return v_max_; }
  double dv() const { return 2.0 * v_max_ / (v_res_ - 1); }
  std::int64_t x_count() const { return x_count_; }
  std::int64_t v_count() const { return v_count_; }

  double velocity(std::int64_t iv, int axis) const;
  void velocity(std::int64_t iv, std::span<double> v) const;
  void position(std::int64_t ix, std::span<double> x) const;
  double speed(std::int64_t iv) const;

  double& L(std::int64_t ix, std::int64_t iv) { return values_[ix * v_count_ + iv]; }
  double L(std::int64_t ix, std::int64_t iv) const { return values_[ix * v_count_ + iv]; }
  double E(std::int64_t ix, std::int64_t iv) const { return energy_[ix * v_count_ + iv]; }
  double Lv(std::int64_t ix, std::int64_t iv, int axis) const {
    return dv_[(ix * v_count_ + iv) * dim_ + axis];
  }
  double Lv_norm(std::int64_t ix, std::int64_t iv) const;

  /// Multilinear interpolation, periodic in x. Throws VelocityOutOfWindow if
  /// any |v_i| exceeds v_max.
  double value(std::span<const double> x, std::span<const double> v) const;
  double energy(std::span<const double> x, std::span<const double> v) const;

  /// Recomputes L_v (central differences, one-sided at the window edge) and E.
  void finalize_derivatives();

  void write_csv(std::ostream& out) const;
  static LagrangianTable read_csv(std::istream& in);

 private:
  double interpolate(const std::vector<double>& data, std::span<const double> x,
                     std::span<const double> v) const;

  int dim_ = 1;
  int x_res_ = 1;
  double v_max_ = 1.0;
  int v_res_ = 2;
  std::int64_t x_count_ = 1;
  std::int64_t v_count_ = 2;
  std::vector<double> values_;
  std::vector<double> dv_;
  std::vector<double> energy_;
};

LagrangianTable legendre_dual(const HamiltonianModel& model, int x_res, double v_max, int v_res,
                              const PSearch& search = {});

/// L^eps(x, v) = L(x, eps v) read from the table.
double scaled_lagrangian(const LagrangianTable& table, double eps, std::span<const double> x,
                         std::span<const double> v);
/// E^eps(x, v) = E(x, eps v) read from the table.
double energy_scaled(const LagrangianTable& table, double eps, std::span<const double> x,
                     std::span<const double> v);

/// Constants of the minimizer speed bound and the equi-Lipschitz estimates.
struct SolverConstants {
  double K = 0.0;   // Lipschitz constant of the initial data
  double A = 0.0;   // slope with A > K
  double B = 0.0;   // L >= 2A|v| - B
  double a1 = 0.0;  // A a1 - B > sup|L(x,0)|
  double k0 = 0.0;  // E >= k0  =>  |v| > a1
  double a0 = 0.0;  // E <= k0  =>  |v| < a0 ; minimizer speed cap
  double b2 = 0.0;  // spatial Lipschitz bound, > K and > sup_{|w|<=4 a0} |L_v|
  double c2 = 0.0;  // L >= b2|v| - c2
  double c1 = 0.0;  // temporal Lipschitz bound, max(c2, sup|L(x,0)|)
  double Q = 0.0;   // max(b2, c1)
};

/// Smallest sampled constants satisfying the chain of inequalities on the
/// table. Strict inequalities are realized with a one-cell margin in v and an
/// interpolation margin (an eighth of the largest second difference) in
/// values, so an independent re-scan at finer resolution still satisfies them.
/// Throws TableWindowTooSmall when 4*a0 leaves the velocity window.
SolverConstants derive_constants(const HamiltonianModel& model, const LagrangianTable& table,
                                 double K);

/// Re-checks every inequality of `derive_constants` against `table`.
/// Returns the largest violation (<= 0 when all hold).
struct ConstantsAudit {
  double worst = 0.0;
  std::vector<std::string> failures;
  bool ok() const { return failures.empty(); }
};
ConstantsAudit audit_constants(const SolverConstants& c, const LagrangianTable& table);

/// Returns a model that equals `model` on |p| <= R0 and is the quadratic form
/// |p|^2/2 + p.xi + V (plus a per-ray constant for custom models) on
/// |p| >= 2 R0. Along each ray the radial slope is blended from the value at
/// R0 to the quadratic slope at 2 R0 with a smoothstep weight.
/// Throws NonConvexBlend when the sampled convexity audit fails.
HamiltonianModel quadratic_truncation(const HamiltonianModel& model, double r0,
                                      double tol_convex = 1e-8);

}  // namespace hjlab
