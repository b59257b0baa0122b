#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hjlab {

namespace detail {
struct Node;
}

/// A parsed scalar expression over position variables `x1..xn` (alias `x`
/// for `x1`) and, optionally, momentum variables `p1..pn` (alias `p`).
///
/// Grammar (whitespace-insensitive):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('+' | '-') unary | power
///     power   := primary ('^' unary)?
///     primary := number | 'pi' | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
///     func    := sin | cos | abs | sqrt | min | max
///
/// Typical uses are harmonic sums `0.5*cos(2*pi*x) - 0.1*sin(4*pi*x + 1)`,
/// kinks `abs(x)`, and min/max of affine terms.
class Expression {
 public:
  Expression() = default;

  /// Parses `text` for dimension `dim`. Throws Error(ParseError) with the
  /// column of the offending token. Momentum variables are accepted only
  /// when `allow_momentum` is set.
  static Expression parse(const std::string& text, int dim, bool allow_momentum = false);
  static Expression constant(double c, int dim);

  double operator()(std::span<const double> x) const;
  double operator()(std::span<const double> x, std::span<const double> p) const;

  /// Symbolic bound on sup|grad_x f| (Euclidean), or nullopt when the
  /// expression leaves the Lipschitz-computable fragment (products of
  /// non-constant factors, sqrt, non-constant powers, momentum variables).
  std::optional<double> lipschitz_bound() const;

  bool uses_momentum() const;
  bool is_constant() const;
  int dim() const { return dim_; }
  const std::string& text() const { return text_; }

 private:
  std::shared_ptr<const detail::Node> root_;
  int dim_ = 1;
  std::string text_;
};

}  // namespace hjlab
