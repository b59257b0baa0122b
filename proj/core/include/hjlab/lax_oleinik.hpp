#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hjlab/cover.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

/// A function sampled on a box of grid points in scaled coordinates. Point
/// index k sits at cover coordinate k / cell_res, i.e. scaled coordinate
/// eps * k / cell_res, so cell k covers indices [k*cell_res, (k+1)*cell_res].
struct ValueField {
  double eps = 1.0;
  int cell_res = 1;
  IndexBox box;
  double time = 0.0;
  double margin = 0.0;  // valid radius left around the region of interest
  std::vector<double> values;

  int dim() const { return box.dim(); }
  double spacing() const { return eps / cell_res; }
  std::int64_t size() const { return box.size(); }
  /// Scaled coordinates of the point with flat index `flat`.
  void point(std::int64_t flat, std::span<double> y) const;
  double at(std::span<const std::int64_t> idx) const { return values[box.flat(idx)]; }
};

/// Grid points covering the cells of `w`.
IndexBox point_box(const CoverWindow& w);

/// Samples `f` (a function of scaled coordinates) on `box`.
ValueField sample_field(double eps, int cell_res, const IndexBox& box, double margin,
                        const ScalarField& f);

struct StepConfig {
  double eps = 1.0;
  double dt = 0.1;
  double search_radius = 0.0;  // scaled coordinates, a whole number of grid spacings
  SolverConstants constants;
};

/// dt and the smallest whole-grid search radius with radius >= a0 * dt.
StepConfig make_step_config(const SolverConstants& c, double eps, int cell_res, double dt);

/// One min-plus step
///   out(x) = min_{|x - y| <= R} u(y) + dt L((x/eps) mod 1, (x - y)/dt)
/// with the stencil and kernel precomputed per residue of x modulo the cell.
class LaxOperator {
 public:
  LaxOperator(const StepConfig& cfg, const LagrangianTable& table, int cell_res, int dim);

  ValueField step(const ValueField& u) const;

  std::int64_t stencil_radius() const { return radius_; }
  const StepConfig& config() const { return cfg_; }

 private:
  StepConfig cfg_;
  int cell_res_;
  int dim_;
  std::int64_t radius_;
  std::vector<IVec> offsets_;
  std::vector<double> kernel_;  // [residue * offsets + j]
};

ValueField lax_step(const ValueField& u, const StepConfig& cfg, const LagrangianTable& table);

/// Fields at times t0, t0 + dt, ..., t0 + T. T must be a whole number of steps.
/// When `log` is set, writes one line per step: time, min, max, space Lipschitz.
std::vector<ValueField> solve(const ValueField& f, double T, const StepConfig& cfg,
                              const LagrangianTable& table, std::ostream* log = nullptr);

/// Number of steps of size dt in T; throws when T is not a multiple of dt.
std::int64_t step_count(double T, double dt);

struct LipschitzCertificate {
  double space = 0.0;  // max forward-difference gradient norm
  double time = 0.0;   // max |u(t+dt) - u(t)| / dt on shared points
  double space_bound = 0.0;
  double time_bound = 0.0;
  bool pass = true;
  std::string violation;
};

double space_lipschitz(const ValueField& u);

LipschitzCertificate certify_lipschitz(std::span<const ValueField> fields, const SolverConstants& c,
                                       double tol_lip = 0.0);

/// Rows `y1..yn,t,value`.
void write_field_csv(std::ostream& out, std::span<const ValueField> fields);

}  // namespace hjlab
