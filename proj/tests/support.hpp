#pragma once

#include <cmath>
#include <random>
#include <string>

#include "metrise/metrise.hpp"

namespace support {

using namespace metrise;

// Random expression trees for property tests. `smooth` keeps to operations
// that are defined and differentiable everywhere.
class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed, bool smooth = false) : rng_(seed), smooth_(smooth) {}

  Expr operator()(int depth)
  {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
    int k = pick(rng_);
    switch (k) {
      case 0:
        return Expr::x();
      case 1:
        return Expr::y();
      case 2:
        return Expr(number());
      case 3:
        return -(*this)(depth - 1);
      case 4:
        return (*this)(depth - 1) + (*this)(depth - 1);
      case 5:
        return (*this)(depth - 1) - (*this)(depth - 1);
      case 6:
        return (*this)(depth - 1) * (*this)(depth - 1);
      case 7:
        if (smooth_) return (*this)(depth - 1) / (1.0 + pow((*this)(depth - 1), Expr(2.0)));
        return (*this)(depth - 1) / (*this)(depth - 1);
      case 8: {
        std::uniform_int_distribution<int> e(0, 3);
        if (smooth_ || e(rng_) > 0) return pow((*this)(depth - 1), Expr(static_cast<double>(e(rng_))));
        return pow((*this)(depth - 1), (*this)(depth - 1));
      }
      default:
        return call(depth - 1);
    }
  }

  double number()
  {
    double span = smooth_ ? 1.0 : 3.0;
    std::uniform_real_distribution<double> u(-span, span);
    std::uniform_int_distribution<int> kind(0, 2);
    double v = u(rng_);
    return kind(rng_) == 0 ? std::round(v) : v;
  }

 private:
  Expr call(int depth)
  {
    Expr a = (*this)(depth);
    if (smooth_) {
      std::uniform_int_distribution<int> f(0, 4);
      switch (f(rng_)) {
        case 0:
          return sin(a);
        case 1:
          return cos(a);
        case 2:
          return atan(a);
        case 3:
          return sqrt(1.0 + pow(a, Expr(2.0)));
        default:
          return log(2.0 + sin(a));
      }
    }
    std::uniform_int_distribution<int> f(0, 6);
    switch (f(rng_)) {
      case 0:
        return sin(a);
      case 1:
        return cos(a);
      case 2:
        return tan(a);
      case 3:
        return exp(a);
      case 4:
        return log(a);
      case 5:
        return sqrt(a);
      default:
        return atan(a);
    }
  }

  std::mt19937_64 rng_;
  bool smooth_;
};

inline Expr X() { return Expr::x(); }
inline Expr Y() { return Expr::y(); }

// Round sphere, stereographic: 4 / (1 + x^2 + y^2)^2 (dx^2 + dy^2).
inline MetricField round_stereographic(const Chart& c = Chart())
{
  Expr f = 4.0 / pow(1.0 + X() * X() + Y() * Y(), Expr(2.0));
  return metric(c, f, Expr(0.0), f);
}

// Round sphere, gnomonic: ((1 + y^2) dx^2 - 2xy dx dy + (1 + x^2) dy^2) / (1 + x^2 + y^2)^2.
inline MetricField round_gnomonic(const Chart& c = Chart())
{
  Expr d = pow(1.0 + X() * X() + Y() * Y(), Expr(2.0));
  return metric(c, (1.0 + Y() * Y()) / d, -(X() * Y()) / d, (1.0 + X() * X()) / d);
}

// (1 + 0.3x) g + 0.2x dx^2 with g the gnomonic round metric.
inline MetricField perturbed_gnomonic(const Chart& c)
{
  Expr d = pow(1.0 + X() * X() + Y() * Y(), Expr(2.0));
  Expr s = 1.0 + 0.3 * X();
  return metric(c, s * (1.0 + Y() * Y()) / d + 0.2 * X(), s * (-(X() * Y()) / d), s * (1.0 + X() * X()) / d);
}

// A smooth connection with all six components nonzero.
inline ConnectionField sample_connection(const Chart& c = Chart())
{
  return connection(c, {parse("0.3*sin(x) + y"), parse("x*y - 0.2"), parse("cos(x+y)"), parse("0.5*x^2"),
                        parse("atan(y) - x"), parse("0.1 + x - y^2")});
}

inline Point random_point(std::mt19937_64& rng, const Chart& c)
{
  std::uniform_real_distribution<double> ux(c.x0, c.x1), uy(c.y0, c.y1);
  return {ux(rng), uy(rng)};
}

}  // namespace support
