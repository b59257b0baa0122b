#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hjlab/cover.hpp"
#include "hjlab/grid.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

/// Regular box grid with `res` points per axis on [lo, hi].
struct BoxGrid {
  int dim = 1;
  Vec lo{0.0};
  Vec hi{0.0};
  int res = 1;

  static BoxGrid uniform(int dim, double lo, double hi, int res);
  std::int64_t size() const;
  double step(int d) const { return res > 1 ? (hi[d] - lo[d]) / (res - 1) : 0.0; }
  void point(std::int64_t flat, std::span<double> out) const;
  bool on_boundary(std::int64_t flat) const;
};

/// Periodic solution w of H(x, g(P) + Dw) = hbar on the cell grid.
struct Corrector {
  Vec P;
  int dim = 1;
  int cell_res = 1;
  std::vector<double> w;        // normalized so w(0) = 0
  double hbar = 0.0;
  double residual = 0.0;        // sup of the upwind residual
  double residual_fraction = 0.0;  // share of points with residual <= tol_cell

  /// Periodic multilinear interpolation.
  double value(std::span<const double> x) const;
  /// Per axis, the one-sided difference towards the lower neighbour.
  void upwind_gradient(std::int64_t flat, std::span<double> out) const;
  /// Forward minus backward difference, largest over axes.
  double kink(std::int64_t flat) const;
};

struct LongtimeConfig {
  int cell_res = 256;
  double dt = 1.0 / 64.0;
  double T = 20.0;
  double tol_hbar = 0.1;
  double tol_cell = 0.1;
  double speed_safety = 1.25;
};

struct LongtimeResult {
  double hbar = 0.0;       // Richardson estimate 2 h(T) - h(T/2)
  double hbar_T = 0.0;     // -u(0,T)/T
  double hbar_half = 0.0;  // -u(0,T/2)/(T/2)
  double drift = 0.0;      // sup |u(.,T)/T - u(.,T/2)/(T/2)|
  Corrector corrector;
};

/// Long-time average of the periodic min-plus semigroup for the shifted
/// Lagrangian L(x,v) - g(P)(x).v, started from zero data.
/// Throws NotConverged when `drift` exceeds tol_hbar.
LongtimeResult effective_longtime(const HamiltonianModel& model, const LagrangianTable& table,
                                  std::span<const double> P, const FormBasis& forms,
                                  const LongtimeConfig& cfg);

/// Upwind residual of `w` against `hbar`; fills residual and residual_fraction.
void corrector_residual(const HamiltonianModel& model, const FormBasis& forms, double tol_cell,
                        Corrector& c);

struct InfSupConfig {
  int x_res = 512;  // points per axis for the sup
  double tol_opt = 1e-10;
  int max_sweeps = 400;
  std::vector<double> temperatures{0.1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4};
};

struct InfSupResult {
  double value = 0.0;
  bool stalled = false;  // last true-max sweep moved no coordinate by tol_opt
  int sweeps = 0;
  Vec theta;
};

/// min over Fourier potentials phi (harmonics up to `harmonics` per axis) of
/// max_x H(x, g(P) + D phi). Coordinate descent with golden-section line
/// searches on a log-sum-exp smoothing whose temperature is lowered to zero.
/// Never returns more than the phi = 0 value.
InfSupResult effective_infsup(const HamiltonianModel& model, std::span<const double> P,
                              const FormBasis& forms, int harmonics, const InfSupConfig& cfg = {});

struct EffectiveTable {
  BoxGrid P_grid;
  std::vector<double> hbar;
  std::vector<std::string> method;
  BoxGrid v_grid;
  std::vector<double> hbar_dual;
  bool convex = false;
  double convexity_violation = 0.0;

  /// Multilinear interpolation of hbar; throws DualRangeExceeded outside the grid.
  double hbar_at(std::span<const double> P) const;
  /// Multilinear interpolation of the dual; throws DualRangeExceeded outside the grid.
  double lbar_at(std::span<const double> v) const;
};

/// Largest second-difference deficit -(f(k-1) - 2 f(k) + f(k+1)) along any axis.
double grid_convexity_violation(const BoxGrid& g, std::span<const double> f);

/// Fills hbar_dual(v) = max_P P.v - hbar(P) on `v_grid` by scan and recomputes
/// the convexity certificate. Throws DualRangeExceeded if any argmax lies on
/// the P-grid boundary.
EffectiveTable effective_lagrangian(const EffectiveTable& t, const BoxGrid& v_grid,
                                    double tol_convex = 1e-8);

/// Per-axis velocity range whose dual argmax stays inside the P grid,
/// estimated from one-sided slopes at the grid edges.
std::pair<double, double> dual_velocity_range(const EffectiveTable& t);

/// Rows `P..,hbar,method`.
void write_hbar_csv(std::ostream& out, const EffectiveTable& t);
/// Rows `v..,lbar`.
void write_lbar_csv(std::ostream& out, const EffectiveTable& t);

}  // namespace hjlab
