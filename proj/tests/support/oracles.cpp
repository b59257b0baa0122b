#include "oracles.hpp"

#include <cmath>
#include <cstdio>

namespace oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

}  // namespace

double legendre_1d(const Fn1& h, double v, double p_max, int samples) {
  double lo = -p_max, hi = p_max;
  double best_p = 0.0, best = -INFINITY;
  for (int round = 0; round < 6; ++round) {
    const double step = (hi - lo) / (samples - 1);
    for (int i = 0; i < samples; ++i) {
      const double p = lo + step * i;
      const double val = p * v - h(p);
      if (val > best) {
        best = val;
        best_p = p;
      }
    }
    lo = best_p - 2.0 * step;
    hi = best_p + 2.0 * step;
  }
  return best;
}

double hopf_lax_1d(const Fn1& f, const Fn1& L, double x, double t, double reach, int samples) {
  double best = INFINITY;
  for (int i = 0; i < samples; ++i) {
    const double y = x - reach + 2.0 * reach * i / (samples - 1);
    best = std::min(best, f(y) + t * L((x - y) / t));
  }
  return best;
}

double integrate(const Fn1& g, double a, double b, int panels) {
  static const double node[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                  0.9061798459386640};
  static const double weight[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                    0.2369268850561891, 0.2369268850561891};
  const double w = (b - a) / panels;
  double s = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double c = a + (k + 0.5) * w;
    for (int i = 0; i < 5; ++i) s += weight[i] * g(c + 0.5 * w * node[i]);
  }
  return 0.5 * w * s;
}

double pendulum_edge() {
  return integrate([](double x) { return std::sqrt(std::max(0.0, 2.0 * (1.0 - std::cos(2 * kPi * x)))); }, 0, 1);
}

double pendulum_hbar(double P) {
  const double a = std::abs(P);
  if (a <= pendulum_edge()) return 1.0;
  const auto action = [](double h) {
    return integrate([h](double x) { return std::sqrt(2.0 * (h - std::cos(2 * kPi * x))); }, 0, 1);
  };
  double lo = 1.0, hi = 1.0 + a * a;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (action(mid) < a ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double line_integral_1d(const Fn1& omega, double a, double b) {
  return integrate([&](double s) { return omega(a + s * (b - a)) * (b - a); }, 0, 1);
}

std::string random_datum(std::mt19937& rng, double amplitude, double& lip) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> kind(0, 3), terms(1, 3), freq(1, 3);
  std::string s = fmt(u(rng));
  lip = 0.0;
  const int m = terms(rng);
  for (int i = 0; i < m; ++i) {
    const double a = amplitude * u(rng) / m;
    switch (kind(rng)) {
      case 0: {
        const int k = freq(rng);
        s += " + " + fmt(a) + "*sin(" + std::to_string(k) + "*x + " + fmt(u(rng)) + ")";
        lip += std::abs(a) * k;
        break;
      }
      case 1: {
        const int k = freq(rng);
        s += " + " + fmt(a) + "*cos(" + std::to_string(k) + "*x)";
        lip += std::abs(a) * k;
        break;
      }
      case 2:
        s += " + " + fmt(a) + "*abs(x - " + fmt(u(rng)) + ")";
        lip += std::abs(a);
        break;
      default: {
        const double b = u(rng), c = u(rng);
        s += " + " + fmt(a) + "*min(x + " + fmt(b) + ", " + fmt(c) + " - x)";
        lip += std::abs(a);
        break;
      }
    }
  }
  return s;
}

std::string random_nonnegative(std::mt19937& rng, double amplitude, double& lip) {
  std::uniform_real_distribution<double> u(0.0, 0.3);
  const std::string inner = random_datum(rng, amplitude, lip);
  return fmt(u(rng)) + " + abs(" + inner + ")";
}

}  // namespace oracle
