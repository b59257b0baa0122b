#pragma once

#include <span>
#include <vector>

#include "hjlab/grid.hpp"
#include "hjlab/hamiltonian.hpp"

namespace hjlab {

/// A closed one-form on the torus: a constant covector plus d(phi) for a
/// periodic potential phi. An empty potential means phi == 0.
struct ClosedOneForm {
  Vec constant;
  ScalarField potential;

  int dim() const { return static_cast<int>(constant.size()); }
  double phi(std::span<const double> x) const;
  /// Constant part plus the central-difference gradient of phi (step 1e-6).
  void value(std::span<const double> x, std::span<double> out) const;
  /// max over a `res`-per-axis cell grid of |constant + grad phi|.
  double sup_norm(int res = 256) const;
  /// max over a `res`-per-axis cell grid of |phi|.
  double potential_bound(int res = 256) const;
};

using FormBasis = std::vector<ClosedOneForm>;

/// The coordinate forms dx_1, ..., dx_n.
FormBasis coordinate_forms(int dim);

/// Sum_i P_i omega_i evaluated at x, i.e. g(P)(x).
void form_combination(const FormBasis& forms, std::span<const double> P, std::span<const double> x,
                      std::span<double> out);

/// Sum_i P_i phi_i(x): the exact part of g(P).
double potential_combination(const FormBasis& forms, std::span<const double> P,
                             std::span<const double> x);

/// G(x)_i = constant_i . (x - x0) + phi_i(x mod 1) - phi_i(x0 mod 1).
Vec period_map(const FormBasis& forms, std::span<const double> x, std::span<const double> x0);

Vec f_eps(double eps, std::span<const double> G);

/// F_eps read in scaled coordinates y = eps x: writes eps G(y / eps) with base point 0.
void scaled_period_map(const FormBasis& forms, double eps, std::span<const double> y, std::span<double> z);

/// max_i ||omega_i||_sup: a Lipschitz constant of G from the Euclidean cover
/// metric to the sup norm on homology coordinates.
double lipschitz_bound_G(const FormBasis& forms, int res = 256);

/// Matrix of constant parts, row i = constant of form i.
std::vector<Vec> constant_matrix(const FormBasis& forms);

/// Box of whole lattice cells in unscaled cover coordinates.
struct CoverWindow {
  IndexBox cells;    // cell k covers [k, k+1) per axis
  int cell_res = 1;  // grid points per cell per axis
  double margin = 0.0;
};

/// Cells guaranteed to contain every x with |eps G(x) - center| <= r, where
/// |.| is the l1 norm on homology coordinates and x0 = 0.
/// Throws DegenerateForms when the constant parts are linearly dependent.
CoverWindow preimage_window(double eps, std::span<const double> center, double r,
                            const FormBasis& forms, int cell_res = 1);

}  // namespace hjlab
