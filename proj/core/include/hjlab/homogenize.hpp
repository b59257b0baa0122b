#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hjlab/cover.hpp"
#include "hjlab/effective.hpp"
#include "hjlab/hamiltonian.hpp"
#include "hjlab/lax_oleinik.hpp"

namespace hjlab {

struct ExperimentSpec {
  int dim = 1;
  ScalarField f;  // initial datum on homology coordinates
  double K_lip = 1.0;
  std::vector<double> eps_list;
  double T = 1.0;
  Vec K_lo{-1.0};
  Vec K_hi{1.0};
  std::vector<double> obs_times;
  int cell_res = 64;
  double dt_ratio = 1.0 / 16.0;  // dt = dt_ratio * eps
  double tol_mono = 1e-6;
  double tol_lip = 0.1;
  double tol_spread = 0.15;       // allowed relative spread of the Lipschitz constants across eps
  double hopf_lax_dv = 1e-3;     // velocity spacing of the homogenized minimization
};

/// Throws InvalidArgument naming the first violated precondition.
void validate(const ExperimentSpec& spec);

/// Largest forward-difference gradient norm of f on a `res`-per-axis grid over [lo, hi].
double sampled_lipschitz(const ScalarField& f, std::span<const double> lo, std::span<const double> hi,
                         int res = 512);

/// f(F_eps(.)) sampled on the cells covering the preimage of the box K plus
/// the reach of T / dt steps, with the margin set to that reach.
ValueField initial_field(const ScalarField& f, std::span<const double> K_lo, std::span<const double> K_hi,
                         double T, const StepConfig& cfg, int cell_res, const FormBasis& forms);

struct ScaledSolution {
  double eps = 0.0;
  StepConfig cfg;
  std::vector<ValueField> observed;  // fields at spec.obs_times, in order
  LipschitzCertificate lipschitz;
};

/// Solves the eps problem with data f(F_eps(.)) on a window covering the
/// preimage of K plus the domain of dependence. Only the observation slices
/// are kept; the Lipschitz certificate is accumulated over every step.
ScaledSolution solve_scaled(const ExperimentSpec& spec, double eps, const LagrangianTable& table,
                            const FormBasis& forms, const SolverConstants& c, std::ostream* log = nullptr);

/// u(z,t) = min_v f(z - t v) + t Lbar(v), with Lbar resampled once on a
/// velocity grid of spacing dv spanning the dual grid of the table.
class HopfLax {
 public:
  HopfLax(const EffectiveTable& e, double dv);
  /// Throws DualRangeExceeded when the minimizing velocity sits on the grid edge.
  double operator()(const ScalarField& f, std::span<const double> z, double t) const;

 private:
  int dim_;
  BoxGrid grid_;
  std::vector<double> vel_;
  std::vector<double> lbar_;
};

double hopf_lax(const ScalarField& f, const EffectiveTable& e, std::span<const double> z, double t,
                double dv);

/// Homogenized solution at each observation time on the grid of spacing
/// 1/points_per_unit (anchored at 0) inside K. Fields carry eps = 1.
std::vector<ValueField> solve_homogenized(const ExperimentSpec& spec, const EffectiveTable& e,
                                          int points_per_unit);

struct ConvergenceRow {
  double eps = 0.0;
  double error = 0.0;
  double space_lip = 0.0;
  double time_lip = 0.0;
  bool lip_pass = false;
  std::int64_t points = 0;  // observation points used
  double seconds = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double b2 = 0.0;
  double c1 = 0.0;
  bool monotone = false;
  bool halved = false;
  bool lipschitz = false;
  double space_spread = 0.0;  // max/min - 1 over the rows
  double time_spread = 0.0;
  bool equi = false;
  bool pass = false;
};

ConvergenceReport convergence_report(const ExperimentSpec& spec, const LagrangianTable& table,
                                     const FormBasis& forms, const EffectiveTable& e,
                                     const SolverConstants& c, std::ostream* log = nullptr);

/// Rows `eps,error,space_lip,time_lip,lip_pass,points`.
void write_report_csv(std::ostream& out, const ConvergenceReport& r);
/// Two columns `eps error`.
void write_plot_data(std::ostream& out, const ConvergenceReport& r);

}  // namespace hjlab
