#pragma once

#include <cmath>
#include <utility>

namespace hjlab {

/// Golden-section search for the maximum of a unimodal function on [a, b].
/// Returns (argmax, max) once the bracket is narrower than `tol`.
template <class F>
std::pair<double, double> golden_section_max(F&& f, double a, double b, double tol) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? std::pair{c, fc} : std::pair{d, fd};
}

template <class F>
std::pair<double, double> golden_section_min(F&& f, double a, double b, double tol) {
  auto [x, v] = golden_section_max([&](double t) { return -f(t); }, a, b, tol);
  return {x, -v};
}

inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * (3.0 - 2.0 * t);
}

/// Antiderivative of smoothstep on [0, t], t clamped to [0, 1].
inline double smoothstep_integral(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 0.5;
  return t * t * t - 0.5 * t * t * t * t;
}

}  // namespace hjlab
