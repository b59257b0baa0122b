#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hjlab/cover.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/lax_oleinik.hpp"

namespace hjlab {

// ---------------------------------------------------------------------------
// Viscosity audits

/// Quadratic test functions
///   phi(x,t) = u(x0,t0) + p.(x-x0) + a (t-t0) +/- mu (|x-x0|^2 + (t-t0)^2)
/// with p on a grid centred at the central-difference gradient and the time
/// slope a ranging over every value for which u - phi has a local max (min)
/// at (x0,t0) among the neighbours within rho grid steps.
struct AuditConfig {
  int p_res = 41;       // gradient samples per axis
  double p_span = 1.5;  // half-width of the gradient grid around the central difference
  std::vector<double> mu{0.5, 2.0};
  int rho = 2;
  double tol_visc = 0.05;
  int stride = 1;       // audit every stride-th spatial point
};

struct AuditReport {
  std::int64_t points = 0;      // sampled (x0, t0)
  std::int64_t touching = 0;    // (point, p, mu) with an admissible time slope
  std::int64_t violations = 0;  // points with at least one violating test function
  double worst = 0.0;           // largest violation margin beyond tol
  Vec worst_x;
  double worst_t = 0.0;
  bool pass() const { return violations == 0; }
};

/// Max test: a + H(x/eps, p) <= tol_visc for every admissible a. Fields are a
/// time sequence on a shared grid; t = 0 is skipped and the last slice uses
/// only past neighbours (the limit of the terminal barrier reduction).
AuditReport subsolution_audit(std::span<const ValueField> u, const HamiltonianModel& model, double eps,
                              const AuditConfig& cfg);
/// Min test: a + H(x/eps, p) >= -tol_visc for every admissible a.
AuditReport supersolution_audit(std::span<const ValueField> u, const HamiltonianModel& model, double eps,
                                const AuditConfig& cfg);

// ---------------------------------------------------------------------------
// Doubling of variables

struct DoublingConfig {
  std::vector<double> deltas{1e-1, 3e-2, 1e-2, 3e-3};
  double lambda = 0.1;
  Vec omega_lo{-0.5};
  Vec omega_hi{0.5};
  double t_lo = 0.0;
  double t_hi = 1.0;
  double min_exponent = 0.4;
  double tol = 1e-9;
  // Lateral boundary thickness in grid points. A min-plus step reads values up
  // to its stencil radius away, so the discrete parabolic boundary is a strip
  // of that width.
  int boundary_width = 1;
};

struct DoublingRow {
  double delta = 0.0;
  double value = 0.0;
  Vec x, y;
  double t = 0.0, s = 0.0;
  double gap = 0.0;  // max(|t - s|, |x - y|)
};

struct DoublingReport {
  std::vector<DoublingRow> rows;
  double exponent = 0.0;  // least-squares slope of log gap against log delta
  double q1 = 0.0;        // max gap / sqrt(delta)
  bool envelope_pass = false;
  double interior_max = 0.0;  // max of u - v over Omega
  double boundary_max = 0.0;  // max of u - v over the parabolic boundary of Omega
  bool comparison_pass = false;
  bool pass() const { return envelope_pass && comparison_pass; }
};

/// Exhaustive maximization of
///   u(x,t) - v(y,s) - lambda (t + s) - (|t - s|^2 + |x - y|^2) / delta
/// over grid points of Omega, pruned by the exact bound on the penalty at any
/// point that can beat the current best.
DoublingReport doubling_probe(std::span<const ValueField> u, std::span<const ValueField> v,
                              const DoublingConfig& cfg);

// ---------------------------------------------------------------------------
// Perturbed test function

/// phi(z,t) = P.(z - y0) + a (t - t0) + mu |z - y0|^2 / 2 on homology coordinates.
struct TestFunctionBundle {
  Vec y0;
  double t0 = 0.0;
  Vec P;
  double mu = 1.0;
  double radius = 0.1;
};

struct PerturbedConfig {
  double tol_P = 1e-9;
  double tol_kink = 0.1;
  double threshold = 0.9;
};

struct PerturbedRow {
  double eps = 0.0;
  std::int64_t sampled = 0;
  std::int64_t kinks = 0;
  std::int64_t satisfied = 0;
  double fraction = 0.0;
  double min_value = 0.0;
  bool pass = false;
};

struct PerturbedReport {
  double theta = 0.0;
  double time_slope = 0.0;
  std::vector<PerturbedRow> rows;
  bool pass() const;
};

/// Evaluates a + H(x mod 1, Dphi(F_eps x) DG(x) + Dw(x)) at the cell-grid
/// points x of the cover with F_eps(x) in the ball B_r(y0), skipping corrector
/// kinks, with a = theta - hbar(P). Throws InvalidArgument for theta <= 0 and
/// CorrectorMismatch when the corrector was computed at another P.
PerturbedReport perturbed_test_probe(const HamiltonianModel& model, const FormBasis& forms,
                                     const Corrector& corrector, double hbar, const TestFunctionBundle& b,
                                     double theta, std::span<const double> eps_list,
                                     const PerturbedConfig& cfg = {});

// ---------------------------------------------------------------------------
// Uniqueness

struct UniquenessConfig {
  ScalarField f;
  ScalarField g;  // g >= 0
  int dim = 1;
  Vec K_lo{-1.0};
  Vec K_hi{1.0};
  double T = 0.5;
  int cell_res = 32;
  double dt_ratio = 1.0 / 16.0;
  double stability_ratio = 2.0;  // allowed growth of the fitted constant per level
};

struct UniquenessLevel {
  int cell_res = 0;
  double dt = 0.0;
  double h = 0.0;
  double diff = 0.0;  // sup |u_level - u_next| at time T on shared points
  double C = 0.0;     // diff / (dt + h)
};

struct UniquenessReport {
  std::int64_t checked = 0;
  std::int64_t order_violations = 0;
  double min_gap = 0.0;  // min of (solution with f+g) - (solution with f)
  double max_gap = 0.0;
  std::vector<UniquenessLevel> levels;
  bool stable = false;
  bool pass() const { return order_violations == 0 && stable; }
};

/// Counts points where the pair of solutions started from f and f + g is out
/// of order, at every step.
void ordering_check(std::span<const ValueField> lower, std::span<const ValueField> upper,
                    std::int64_t& checked, std::int64_t& violations, double& min_gap, double& max_gap);

/// (i) ordering of the solutions from f and f + g at every step; (ii) three
/// refinement levels (cell_res, dt), (2 cell_res, dt/2), (4 cell_res, dt/4)
/// with C = sup-difference / (dt + h) compared between consecutive pairs.
UniquenessReport uniqueness_probe(const UniquenessConfig& cfg, double eps, const LagrangianTable& table,
                                  const FormBasis& forms, const SolverConstants& c);

/// Solution of the eps problem on K from data f(F_eps(.)), all steps kept.
std::vector<ValueField> solve_on_box(const ScalarField& f, std::span<const double> K_lo,
                                     std::span<const double> K_hi, double T, double eps, int cell_res,
                                     double dt, const LagrangianTable& table, const FormBasis& forms,
                                     const SolverConstants& c);

}  // namespace hjlab
