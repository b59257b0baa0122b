#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hjlab/error.hpp"
#include "hjlab/expression.hpp"
#include "oracles.hpp"

using hjlab::Error;
using hjlab::ErrorCode;
using hjlab::Expression;

namespace {

double eval1(const std::string& s, double x) {
  const Expression e = Expression::parse(s, 1);
  return e({&x, 1});
}

}  // namespace

TEST(Expression, ArithmeticAndPrecedence) {
  EXPECT_DOUBLE_EQ(eval1("1 + 2*3", 0.0), 7.0);
  EXPECT_DOUBLE_EQ(eval1("(1 + 2)*3", 0.0), 9.0);
  EXPECT_DOUBLE_EQ(eval1("-2^2", 0.0), -4.0);
  EXPECT_DOUBLE_EQ(eval1("2^-1", 0.0), 0.5);
  EXPECT_DOUBLE_EQ(eval1("1/64", 0.0), 1.0 / 64.0);
  EXPECT_DOUBLE_EQ(eval1("x*x - x", 3.0), 6.0);
}

TEST(Expression, Functions) {
  EXPECT_NEAR(eval1("cos(2*pi*x)", 0.25), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(eval1("abs(x)", -1.5), 1.5);
  EXPECT_DOUBLE_EQ(eval1("min(x, 1, 2)", 3.0), 1.0);
  EXPECT_DOUBLE_EQ(eval1("max(x + 1, 1 - x)", -2.0), 3.0);
  EXPECT_DOUBLE_EQ(eval1("sqrt(x)", 9.0), 3.0);
}

TEST(Expression, MultipleVariables) {
  const Expression e = Expression::parse("x1 + 10*x2 - x3", 3);
  const double x[3] = {1.0, 2.0, 4.0};
  EXPECT_DOUBLE_EQ(e(x), 17.0);
  EXPECT_THROW(Expression::parse("x4", 3), Error);
}

TEST(Expression, MomentumOnlyWhenAllowed) {
  EXPECT_THROW(Expression::parse("p^2/2", 1), Error);
  const Expression h = Expression::parse("0.25*p^4 + cos(2*pi*x)", 1, true);
  const double x = 0.0, p = 2.0;
  EXPECT_DOUBLE_EQ(h({&x, 1}, {&p, 1}), 5.0);
  EXPECT_TRUE(h.uses_momentum());
}

TEST(Expression, ParseErrorsNameTheColumn) {
  try {
    Expression::parse("1 + * 2", 1);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Expression::parse("sin(x", 1), Error);
  EXPECT_THROW(Expression::parse("foo(x)", 1), Error);
  EXPECT_THROW(Expression::parse("", 1), Error);
  EXPECT_THROW(Expression::parse("1 2", 1), Error);
}

TEST(Expression, ConstantDetection) {
  EXPECT_TRUE(Expression::parse("pi/2 + 1", 1).is_constant());
  EXPECT_FALSE(Expression::parse("0*x", 1).is_constant());
  EXPECT_TRUE(Expression::constant(3.0, 2).is_constant());
}

TEST(Expression, LipschitzBoundsOfTheGrammarFragment) {
  EXPECT_NEAR(*Expression::parse("cos(pi*x/2)", 1).lipschitz_bound(), M_PI / 2, 1e-12);
  EXPECT_NEAR(*Expression::parse("0.5*sin(3*x + 1) - 2*abs(x)", 1).lipschitz_bound(), 3.5, 1e-12);
  EXPECT_NEAR(*Expression::parse("min(x + 1, 2 - 3*x)", 1).lipschitz_bound(), 3.0, 1e-12);
  EXPECT_FALSE(Expression::parse("x*x", 1).lipschitz_bound().has_value());
  EXPECT_FALSE(Expression::parse("sqrt(x)", 1).lipschitz_bound().has_value());
}

// The symbolic bound dominates sampled difference quotients for random
// grammar expressions.
TEST(ExpressionProperty, SymbolicBoundDominatesDifferenceQuotients) {
  std::mt19937 rng(7);
  for (int k = 0; k < 100; ++k) {
    double lip = 0.0;
    const std::string s = oracle::random_datum(rng, 2.0, lip);
    const Expression e = Expression::parse(s, 1);
    const auto bound = e.lipschitz_bound();
    ASSERT_TRUE(bound.has_value()) << s;
    EXPECT_LE(*bound, lip + 1e-9) << s;
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const double a = -3.0 + 6.0 * i / 2000.0, b = a + 1e-4;
      worst = std::max(worst, std::abs(e({&b, 1}) - e({&a, 1})) / 1e-4);
    }
    EXPECT_LE(worst, *bound * (1.0 + 1e-6) + 1e-9) << s;
  }
}
