#pragma once

// Test-only reference computations. None of these call into the library's
// numerical routines; they use plain dense scans and quadrature.

#include <cstdint>
#include <functional>
#include <random>
#include <string>

namespace oracle {

using Fn1 = std::function<double(double)>;

/// sup_p p v - h(p) by a dense scan on [-p_max, p_max] followed by repeated
/// local rescans around the best sample.
double legendre_1d(const Fn1& h, double v, double p_max, int samples = 20001);

/// min_y f(y) + t L((x - y)/t) by dense scan over y in [x - reach, x + reach].
double hopf_lax_1d(const Fn1& f, const Fn1& L, double x, double t, double reach, int samples = 40001);

/// Composite Gauss-Legendre quadrature on [a, b].
double integrate(const Fn1& g, double a, double b, int panels = 2000);

/// Effective Hamiltonian of p^2/2 + cos(2 pi x): 1 on |P| <= 4/pi, otherwise
/// the energy h with int_0^1 sqrt(2(h - cos 2 pi x)) dx = |P|.
double pendulum_hbar(double P);
/// The flat-piece edge int_0^1 sqrt(2(1 - cos 2 pi x)) dx.
double pendulum_edge();

/// int_0^1 omega(gamma(s)) . gamma'(s) ds along the straight segment a -> b
/// for a one-form given by its components.
double line_integral_1d(const Fn1& omega, double a, double b);

/// Random expressions from the config grammar: sums of harmonics, abs and
/// min/max of affine terms. `lip` receives a Lipschitz bound computed by hand
/// from the generated coefficients.
std::string random_datum(std::mt19937& rng, double amplitude, double& lip);
/// A random non-negative expression (abs of a datum plus a constant).
std::string random_nonnegative(std::mt19937& rng, double amplitude, double& lip);

}  // namespace oracle
