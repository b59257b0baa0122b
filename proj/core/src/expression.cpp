#include "hjlab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>

#include "hjlab/error.hpp"
#include "hjlab/grid.hpp"

namespace hjlab {

namespace detail {

enum class Op { Const, VarX, VarP, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Abs, Sqrt, Min, Max };

struct Node {
  Op op = Op::Const;
  double value = 0.0;
  int index = 0;
  std::vector<std::shared_ptr<const Node>> args;

  double eval(std::span<const double> x, std::span<const double> p) const {
    switch (op) {
      case Op::Const: return value;
      case Op::VarX: return x[index];
      case Op::VarP: return p[index];
      case Op::Add: return args[0]->eval(x, p) + args[1]->eval(x, p);
      case Op::Sub: return args[0]->eval(x, p) - args[1]->eval(x, p);
      case Op::Mul: return args[0]->eval(x, p) * args[1]->eval(x, p);
      case Op::Div: return args[0]->eval(x, p) / args[1]->eval(x, p);
      case Op::Neg: return -args[0]->eval(x, p);
      case Op::Pow: {
        const double base = args[0]->eval(x, p);
        const double e = args[1]->eval(x, p);
        if (e == 2.0) return base * base;
        return std::pow(base, e);
      }
      case Op::Sin: return std::sin(args[0]->eval(x, p));
      case Op::Cos: return std::cos(args[0]->eval(x, p));
      case Op::Abs: return std::abs(args[0]->eval(x, p));
      case Op::Sqrt: return std::sqrt(args[0]->eval(x, p));
      case Op::Min: {
        double m = args[0]->eval(x, p);
        for (std::size_t i = 1; i < args.size(); ++i) m = std::min(m, args[i]->eval(x, p));
        return m;
      }
      case Op::Max: {
        double m = args[0]->eval(x, p);
        for (std::size_t i = 1; i < args.size(); ++i) m = std::max(m, args[i]->eval(x, p));
        return m;
      }
    }
    return 0.0;
  }

  bool constant() const {
    if (op == Op::VarX || op == Op::VarP) return false;
    return std::all_of(args.begin(), args.end(), [](const auto& a) { return a->constant(); });
  }

  bool momentum() const {
    if (op == Op::VarP) return true;
    return std::any_of(args.begin(), args.end(), [](const auto& a) { return a->momentum(); });
  }

  // Per-axis bound on sup |d/dx_i|.
  std::optional<Vec> lipschitz(int dim) const {
    if (constant()) return Vec(dim, 0.0);
    auto child = [&](std::size_t i) { return args[i]->lipschitz(dim); };
    auto combine = [&](const Vec& a, const Vec& b, double sa, double sb) {
      Vec r(dim);
      for (int d = 0; d < dim; ++d) r[d] = sa * a[d] + sb * b[d];
      return r;
    };
    switch (op) {
      case Op::VarX: {
        Vec r(dim, 0.0);
        r[index] = 1.0;
        return r;
      }
      case Op::VarP: return std::nullopt;
      case Op::Add:
      case Op::Sub: {
        auto a = child(0), b = child(1);
        if (!a || !b) return std::nullopt;
        return combine(*a, *b, 1.0, 1.0);
      }
      case Op::Neg:
      case Op::Sin:
      case Op::Cos:
      case Op::Abs: return child(0);
      case Op::Mul: {
        const Vec zero(dim, 0.0);
        if (args[0]->constant()) {
          auto b = child(1);
          if (!b) return std::nullopt;
          return combine(zero, *b, 0.0, std::abs(args[0]->eval({}, {})));
        }
        if (args[1]->constant()) {
          auto a = child(0);
          if (!a) return std::nullopt;
          return combine(*a, zero, std::abs(args[1]->eval({}, {})), 0.0);
        }
        return std::nullopt;
      }
      case Op::Div: {
        if (!args[1]->constant()) return std::nullopt;
        auto a = child(0);
        if (!a) return std::nullopt;
        const Vec zero(dim, 0.0);
        return combine(*a, zero, 1.0 / std::abs(args[1]->eval({}, {})), 0.0);
      }
      case Op::Min:
      case Op::Max: {
        Vec r(dim, 0.0);
        for (std::size_t i = 0; i < args.size(); ++i) {
          auto c = child(i);
          if (!c) return std::nullopt;
          for (int d = 0; d < dim; ++d) r[d] = std::max(r[d], (*c)[d]);
        }
        return r;
      }
      default: return std::nullopt;
    }
  }
};

using NodePtr = std::shared_ptr<const Node>;

class Parser {
 public:
  Parser(const std::string& text, int dim, bool allow_momentum)
      : s_(text), dim_(dim), allow_p_(allow_momentum) {}

  NodePtr parse() {
    auto n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ParseError,
                "expression '" + s_ + "' column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Op op, std::vector<NodePtr> args, double value = 0.0, int index = 0) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    n->value = value;
    n->index = index;
    return n;
  }

  NodePtr expr() {
    auto lhs = term();
    for (;;) {
      if (accept('+')) lhs = make(Op::Add, {lhs, term()});
      else if (accept('-')) lhs = make(Op::Sub, {lhs, term()});
      else return lhs;
    }
  }

  NodePtr term() {
    auto lhs = unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::Mul, {lhs, unary()});
      else if (accept('/')) lhs = make(Op::Div, {lhs, unary()});
      else return lhs;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = primary();
    if (accept('^')) return make(Op::Pow, {base, unary()});
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      auto e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Op::Const, {}, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const auto start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "pi") return make(Op::Const, {}, kPi);
      if (id == "x" || id == "p" || ((id[0] == 'x' || id[0] == 'p') && id.size() > 1 &&
                                     std::all_of(id.begin() + 1, id.end(), ::isdigit))) {
        const int k = id.size() == 1 ? 0 : std::atoi(id.c_str() + 1) - 1;
        if (k < 0 || k >= dim_) fail("variable '" + id + "' outside dimension " + std::to_string(dim_));
        if (id[0] == 'p') {
          if (!allow_p_) fail("momentum variable '" + id + "' not allowed here");
          return make(Op::VarP, {}, 0.0, k);
        }
        return make(Op::VarX, {}, 0.0, k);
      }
      static const std::pair<const char*, Op> funcs[] = {{"sin", Op::Sin}, {"cos", Op::Cos},
                                                         {"abs", Op::Abs}, {"sqrt", Op::Sqrt},
                                                         {"min", Op::Min}, {"max", Op::Max}};
      for (const auto& [name, op] : funcs) {
        if (id != name) continue;
        if (!accept('(')) fail("expected '(' after " + id);
        std::vector<NodePtr> args{expr()};
        while (accept(',')) args.push_back(expr());
        if (!accept(')')) fail("expected ')'");
        const bool variadic = op == Op::Min || op == Op::Max;
        if (!variadic && args.size() != 1) fail(id + " takes one argument");
        if (variadic && args.size() < 2) fail(id + " takes at least two arguments");
        return make(op, std::move(args));
      }
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string s_;
  std::size_t pos_ = 0;
  int dim_;
  bool allow_p_;
};

}  // namespace detail

Expression Expression::parse(const std::string& text, int dim, bool allow_momentum) {
  require(dim >= 1, "expression dimension must be positive");
  Expression e;
  e.root_ = detail::Parser(text, dim, allow_momentum).parse();
  e.dim_ = dim;
  e.text_ = text;
  return e;
}

Expression Expression::constant(double c, int dim) {
  auto n = std::make_shared<detail::Node>();
  n->value = c;
  Expression e;
  e.root_ = n;
  e.dim_ = dim;
  e.text_ = std::to_string(c);
  return e;
}

double Expression::operator()(std::span<const double> x) const { return root_->eval(x, {}); }

double Expression::operator()(std::span<const double> x, std::span<const double> p) const {
  return root_->eval(x, p);
}

std::optional<double> Expression::lipschitz_bound() const {
  if (!root_) return 0.0;
  auto per_axis = root_->lipschitz(dim_);
  if (!per_axis) return std::nullopt;
  return norm2(*per_axis);
}

bool Expression::uses_momentum() const { return root_ && root_->momentum(); }

bool Expression::is_constant() const { return !root_ || root_->constant(); }

}  // namespace hjlab
