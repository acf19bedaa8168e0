#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <thread>
#include <vector>

#include "support.hpp"

using namespace metrise;

namespace {

double at(const char* src, double x, double y) { return eval(parse(src), x, y); }

std::optional<double> try_eval(const Expr& e, double x, double y)
{
  try {
    return eval(e, x, y);
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

bool same_bits(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

}  // namespace

TEST(ExprParse, Examples)
{
  EXPECT_EQ(at("x^2 + y", 2, 3), 7.0);
  EXPECT_EQ(at("sin(x)*cos(x)", 0, 0), 0.0);
  EXPECT_EQ(eval(diff(parse("2*x^3"), Var::x), 2, 0), 24.0);
  EXPECT_DOUBLE_EQ(at("1/(1+x^2+y^2)", 1, 1), 1.0 / 3.0);
  EXPECT_EQ(at("exp(0)", 0, 0), 1.0);
}

TEST(ExprParse, Precedence)
{
  EXPECT_EQ(at("-x^2", 3, 0), -9.0);
  EXPECT_EQ(at("-2^2", 0, 0), -4.0);
  EXPECT_EQ(at("2^3^2", 0, 0), 512.0);
  EXPECT_EQ(at("2*3+4", 0, 0), 10.0);
  EXPECT_EQ(at("2+3*4", 0, 0), 14.0);
  EXPECT_EQ(at("x-y-1", 5, 2), 2.0);
  EXPECT_EQ(at("x/y/2", 8, 2), 2.0);
  EXPECT_EQ(at("2^-1", 0, 0), 0.5);
  EXPECT_EQ(at("(x+y)*(x-y)", 3, 2), 5.0);
  EXPECT_EQ(at(" 1.5e1 + .5 ", 0, 0), 15.5);
  EXPECT_DOUBLE_EQ(at("pi", 0, 0), std::numbers::pi);
}

TEST(ExprParse, SyntaxErrorsCarryOffsetAndExpectation)
{
  try {
    parse("x +");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 3u);
    EXPECT_FALSE(e.expected().empty());
  }
  try {
    parse("(x + 1");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 6u);
  }
  EXPECT_THROW(parse(""), ParseError);
  EXPECT_THROW(parse("x y"), ParseError);
  EXPECT_THROW(parse("sin x"), ParseError);
  EXPECT_THROW(parse("2 * * 3"), ParseError);
}

TEST(ExprParse, UnknownIdentifier)
{
  try {
    parse("1 + foo(x)");
    FAIL() << "expected UnknownIdentifierError";
  } catch (const UnknownIdentifierError& e) {
    EXPECT_EQ(e.name(), "foo");
    EXPECT_EQ(e.offset(), 4u);
  }
  EXPECT_THROW(parse("z"), UnknownIdentifierError);
}

TEST(ExprEval, DomainErrorsNameSubexpressionAndPoint)
{
  try {
    at("x/y", 1, 0);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(e.subexpression().find('/'), std::string::npos);
    EXPECT_EQ(e.x(), 1.0);
    EXPECT_EQ(e.y(), 0.0);
  }
  EXPECT_THROW(at("log(x)", 0, 0), DomainError);
  EXPECT_THROW(at("log(x)", -1, 0), DomainError);
  EXPECT_THROW(at("sqrt(x)", -1, 0), DomainError);
  EXPECT_THROW(at("x^0.5", -1, 0), DomainError);
  EXPECT_THROW(at("x^(-1)", 0, 0), DomainError);
  EXPECT_EQ(at("x^3", -2, 0), -8.0);
  EXPECT_EQ(at("sqrt(x)", 0, 0), 0.0);
}

TEST(ExprDiff, Examples)
{
  Expr d = diff(parse("x*y"), Var::x);
  EXPECT_EQ(print(d), print(parse("y")));
  EXPECT_DOUBLE_EQ(eval(diff(parse("sin(x)"), Var::x), std::numbers::pi, 0), -1.0);
  EXPECT_EQ(eval(diff(parse("x^2*y"), Var::y), 3, 7), 9.0);
  EXPECT_DOUBLE_EQ(eval(diff(parse("x^y"), Var::y), 2, 3), 8.0 * std::log(2.0));
  EXPECT_DOUBLE_EQ(eval(diff(parse("tan(x)"), Var::x), 0.5, 0), 1.0 / std::pow(std::cos(0.5), 2));
  EXPECT_DOUBLE_EQ(eval(diff(parse("atan(x)"), Var::x), 2, 0), 0.2);
  EXPECT_DOUBLE_EQ(eval(diff(parse("sqrt(x)"), Var::x), 4, 0), 0.25);
  EXPECT_DOUBLE_EQ(eval(diff(parse("log(x)"), Var::x), 4, 0), 0.25);
  EXPECT_EQ(eval(diff(parse("7"), Var::x), 1, 1), 0.0);
}

TEST(ExprProperty, PrintParseRoundTrip)
{
  support::ExprGen gen(101);
  std::mt19937_64 rng(102);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int n = 0; n < 300; ++n) {
    Expr e = gen(6);
    std::string text = print(e);
    Expr back = parse(text);
    EXPECT_EQ(print(back), text);
    for (int k = 0; k < 100; ++k) {
      double x = u(rng), y = u(rng);
      auto a = try_eval(e, x, y), b = try_eval(back, x, y);
      ASSERT_EQ(a.has_value(), b.has_value()) << text;
      if (a) {
        ASSERT_TRUE(same_bits(*a, *b)) << text << " at " << x << ", " << y;
      }
    }
  }
}

// Central difference along one axis.
double central(const Expr& e, double x, double y, int axis, double h)
{
  return axis == 0 ? (eval(e, x + h, y) - eval(e, x - h, y)) / (2 * h) : (eval(e, x, y + h) - eval(e, x, y - h)) / (2 * h);
}

// Sixth-order Richardson extrapolation of the central difference.
double richardson(const Expr& e, double x, double y, int axis, double h)
{
  double d1 = central(e, x, y, axis, h), d2 = central(e, x, y, axis, h / 2), d3 = central(e, x, y, axis, h / 4);
  double r1 = (4 * d2 - d1) / 3, r2 = (4 * d3 - d2) / 3;
  return (16 * r2 - r1) / 15;
}

TEST(ExprProperty, DiffMatchesCentralDifference)
{
  support::ExprGen gen(201, true);
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double h = 1e-5;
  int plain = 0, total = 0;
  for (int n = 0; n < 200; ++n) {
    Expr e = gen(6);
    std::array<Expr, 2> d{diff(e, Var::x), diff(e, Var::y)};
    for (int k = 0; k < 100; ++k) {
      double x = u(rng), y = u(rng);
      if (!(std::abs(eval(e, x, y)) < 1e6)) continue;
      for (int axis = 0; axis < 2; ++axis) {
        double exact = eval(d[static_cast<std::size_t>(axis)], x, y);
        double scale = std::max(1.0, std::abs(exact));
        double fd = central(e, x, y, axis, h);
        // The plain oracle is only meaningful once it agrees with itself at 2h.
        if (std::abs(fd - central(e, x, y, axis, 2 * h)) < 1e-7 * scale) {
          ASSERT_LE(std::abs(exact - fd), 1e-6 * scale) << print(e);
          ++plain;
        }
        ASSERT_LE(std::abs(exact - richardson(e, x, y, axis, 1e-3)), 1e-6 * scale) << print(e);
        ++total;
      }
    }
  }
  EXPECT_GT(total, 30000);
  EXPECT_GT(plain, total * 9 / 10);
}

TEST(ExprProperty, EvaluationIsReentrant)
{
  support::ExprGen gen(301, true);
  std::vector<Expr> exprs;
  for (int n = 0; n < 50; ++n) exprs.push_back(gen(5));
  auto sweep = [&] {
    std::vector<double> out;
    for (const Expr& e : exprs)
      for (int k = 0; k < 50; ++k) out.push_back(eval(e, 0.03 * k - 0.7, 0.5 - 0.02 * k));
    return out;
  };
  std::vector<double> serial = sweep();
  std::vector<std::vector<double>> results(4);
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) pool.emplace_back([&, t] { results[static_cast<std::size_t>(t)] = sweep(); });
  for (auto& t : pool) t.join();
  for (const auto& r : results) {
    ASSERT_EQ(r.size(), serial.size());
    for (std::size_t i = 0; i < r.size(); ++i) ASSERT_TRUE(same_bits(r[i], serial[i]));
  }
}
