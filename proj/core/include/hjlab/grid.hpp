#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hjlab {

using Vec = std::vector<double>;
using IVec = std::vector<std::int64_t>;

inline constexpr int kMaxDim = 4;
inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.141592653589793238462643383279;

// Reduces a coordinate to the periodic cell [0,1).
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

inline std::int64_t floor_mod(std::int64_t k, std::int64_t m) {
  std::int64_t r = k % m;
  return r < 0 ? r + m : r;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double c : v) s += c * c;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Inclusive integer index box, row-major with the last axis fastest.
struct IndexBox {
  IVec lo;
  IVec hi;

  int dim() const { return static_cast<int>(lo.size()); }

  std::int64_t extent(int d) const { return hi[d] - lo[d] + 1; }

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int d = 0; d < dim(); ++d) {
      const auto e = extent(d);
      if (e <= 0) return 0;
      n *= e;
    }
    return n;
  }

  bool contains(std::span<const std::int64_t> idx) const {
    for (int d = 0; d < dim(); ++d)
      if (idx[d] < lo[d] || idx[d] > hi[d]) return false;
    return true;
  }

  std::int64_t flat(std::span<const std::int64_t> idx) const {
    std::int64_t f = 0;
    for (int d = 0; d < dim(); ++d) f = f * extent(d) + (idx[d] - lo[d]);
    return f;
  }

  void unflat(std::int64_t f, std::span<std::int64_t> idx) const {
    for (int d = dim() - 1; d >= 0; --d) {
      const auto e = extent(d);
      idx[d] = lo[d] + f % e;
      f /= e;
    }
  }

  IndexBox shrunk(std::int64_t r) const {
    IndexBox b = *this;
    for (int d = 0; d < dim(); ++d) {
      b.lo[d] += r;
      b.hi[d] -= r;
    }
    return b;
  }

  friend bool operator==(const IndexBox&, const IndexBox&) = default;
};

IndexBox intersect(const IndexBox& a, const IndexBox& b);

/// Regular periodic grid on the unit cell with `res` points per axis.
struct CellGrid {
  int dim = 1;
  int res = 1;

  std::int64_t size() const {
    std::int64_t n = 1;
    for (int d = 0; d < dim; ++d) n *= res;
    return n;
  }
  double spacing() const { return 1.0 / res; }

  void coords(std::int64_t flat, std::span<double> x) const {
    for (int d = dim - 1; d >= 0; --d) {
      x[d] = static_cast<double>(flat % res) / res;
      flat /= res;
    }
  }

  std::int64_t flat_wrapped(std::span<const std::int64_t> idx) const {
    std::int64_t f = 0;
    for (int d = 0; d < dim; ++d) f = f * res + floor_mod(idx[d], res);
    return f;
  }
};

/// Integer offsets of a Euclidean ball of radius `r` lattice units.
std::vector<IVec> ball_offsets(int dim, std::int64_t r);

}  // namespace hjlab
