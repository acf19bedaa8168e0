#pragma once

// Pointwise tensor algebra on a single 2D chart.
//
// Every field can be evaluated in two scalar types: plain double, or Dual
// (value plus exact first partials in x and y). Operations on fields are
// written once as generic lambdas and so carry derivatives through the
// product and chain rules without any finite differencing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "metrise/expr.hpp"

namespace metrise {

// ---------------------------------------------------------------------------
// First-order forward-mode number over the chart variables (x, y).

struct Dual {
  double v = 0.0;
  std::array<double, 2> d{0.0, 0.0};

  Dual() = default;
  Dual(double value) : v(value) {}
  Dual(double value, double dx, double dy) : v(value), d{dx, dy} {}

  Dual& operator+=(const Dual& o)
  {
    v += o.v;
    d[0] += o.d[0];
    d[1] += o.d[1];
    return *this;
  }
  Dual& operator-=(const Dual& o)
  {
    v -= o.v;
    d[0] -= o.d[0];
    d[1] -= o.d[1];
    return *this;
  }
  Dual& operator*=(const Dual& o) { return *this = *this * o; }
  Dual& operator/=(const Dual& o) { return *this = *this / o; }

  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator-(const Dual& a) { return {-a.v, -a.d[0], -a.d[1]}; }
  friend Dual operator*(const Dual& a, const Dual& b)
  {
    return {a.v * b.v, a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]};
  }
  friend Dual operator/(const Dual& a, const Dual& b)
  {
    double q = a.v / b.v;
    return {q, (a.d[0] - q * b.d[0]) / b.v, (a.d[1] - q * b.d[1]) / b.v};
  }
};

inline Dual chain(const Dual& a, double f, double df) { return {f, df * a.d[0], df * a.d[1]}; }

inline Dual sqrt(const Dual& a)
{
  double s = std::sqrt(a.v);
  return chain(a, s, 0.5 / s);
}
inline Dual log(const Dual& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
inline Dual exp(const Dual& a)
{
  double e = std::exp(a.v);
  return chain(a, e, e);
}
inline Dual sin(const Dual& a) { return chain(a, std::sin(a.v), std::cos(a.v)); }
inline Dual cos(const Dual& a) { return chain(a, std::cos(a.v), -std::sin(a.v)); }
inline Dual atan(const Dual& a) { return chain(a, std::atan(a.v), 1.0 / (1.0 + a.v * a.v)); }

inline double value_of(double a) { return a; }
inline double value_of(const Dual& a) { return a.v; }

// ---------------------------------------------------------------------------
// Tensor shapes, parameterized on the scalar type.

template <class S> using Scalar = S;
template <class S> using Vec2 = std::array<S, 2>;
template <class S> using Mat2 = std::array<std::array<S, 2>, 2>;
// T[i][j][k] = A^i_{jk}
template <class S> using Tensor21 = std::array<Mat2<S>, 2>;

using Point = std::array<double, 2>;

// Recursive helpers over the nested-array shapes above.
namespace detail {

template <class T> struct ShapeOps;

template <> struct ShapeOps<double> {
  static Dual zip(double v, double dx, double dy) { return {v, dx, dy}; }
  static double value(const Dual& a) { return a.v; }
  static double deriv(const Dual& a, int axis) { return a.d[static_cast<std::size_t>(axis)]; }
  template <class F> static double map2(const double& a, const double& b, F f) { return f(a, b); }
  static double max_abs(double a) { return std::abs(a); }
};

template <class X, std::size_t N> struct ShapeOps<std::array<X, N>> {
  using Inner = ShapeOps<X>;
  using DualT = std::array<decltype(Inner::zip(std::declval<X>(), std::declval<X>(), std::declval<X>())), N>;

  static DualT zip(const std::array<X, N>& v, const std::array<X, N>& dx, const std::array<X, N>& dy)
  {
    DualT out;
    for (std::size_t i = 0; i < N; ++i) out[i] = Inner::zip(v[i], dx[i], dy[i]);
    return out;
  }
  template <class D> static std::array<X, N> value(const std::array<D, N>& a)
  {
    std::array<X, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = Inner::value(a[i]);
    return out;
  }
  template <class D> static std::array<X, N> deriv(const std::array<D, N>& a, int axis)
  {
    std::array<X, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = Inner::deriv(a[i], axis);
    return out;
  }
  template <class F> static std::array<X, N> map2(const std::array<X, N>& a, const std::array<X, N>& b, F f)
  {
    std::array<X, N> out;
    for (std::size_t i = 0; i < N; ++i) out[i] = Inner::map2(a[i], b[i], f);
    return out;
  }
  static double max_abs(const std::array<X, N>& a)
  {
    double m = 0.0;
    for (const auto& e : a) m = std::max(m, Inner::max_abs(e));
    return m;
  }
};

}  // namespace detail

// Largest absolute component of a double-valued tensor.
template <class V> double max_abs(const V& v) { return detail::ShapeOps<V>::max_abs(v); }

template <class V> V difference(const V& a, const V& b)
{
  return detail::ShapeOps<V>::map2(a, b, [](double p, double q) { return p - q; });
}

template <class V> double max_abs_diff(const V& a, const V& b) { return max_abs(difference(a, b)); }

// ---------------------------------------------------------------------------
// Chart: a closed coordinate rectangle with a sampling grid.

struct Chart {
  double x0 = -1.0, x1 = 1.0, y0 = -1.0, y1 = 1.0;
  int nx = 64, ny = 64;

  Chart() = default;
  Chart(double x0_, double x1_, double y0_, double y1_, int nx_ = 64, int ny_ = 64)
      : x0(x0_), x1(x1_), y0(y0_), y1(y1_), nx(nx_), ny(ny_)
  {
    validate();
  }

  void validate() const
  {
    if (!(x0 < x1) || !(y0 < y1)) throw std::invalid_argument("chart domain must satisfy x0 < x1 and y0 < y1");
    if (nx < 2 || ny < 2) throw std::invalid_argument("chart grid needs at least 2 points per axis");
  }

  bool contains(const Point& p) const { return p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1; }

  Point grid_point(int i, int j) const
  {
    return {x0 + (x1 - x0) * i / (nx - 1), y0 + (y1 - y0) * j / (ny - 1)};
  }

  Chart with_grid(int nx_, int ny_) const { return Chart(x0, x1, y0, y1, nx_, ny_); }

  bool same_domain(const Chart& o) const { return x0 == o.x0 && x1 == o.x1 && y0 == o.y0 && y1 == o.y1; }
  friend bool operator==(const Chart&, const Chart&) = default;
};

class ChartMismatch : public std::invalid_argument {
 public:
  ChartMismatch() : std::invalid_argument("fields live on different charts") {}
};

// ---------------------------------------------------------------------------
// Parallel sweeps. METRISE_THREADS caps the worker count.

inline unsigned worker_count()
{
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("METRISE_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return n;
}

template <class F> void parallel_for(std::size_t count, F&& body)
{
  unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Maximum of f over the chart grid.
template <class F> double grid_sup(const Chart& chart, F&& f)
{
  std::vector<double> row_max(static_cast<std::size_t>(chart.nx), 0.0);
  parallel_for(static_cast<std::size_t>(chart.nx), [&](std::size_t i) {
    double m = 0.0;
    for (int j = 0; j < chart.ny; ++j) m = std::max(m, static_cast<double>(f(chart.grid_point(static_cast<int>(i), j))));
    row_max[i] = m;
  });
  return *std::max_element(row_max.begin(), row_max.end());
}

// ---------------------------------------------------------------------------
// Field<T>: a T-valued function on the chart with exact first derivatives.

template <template <class> class T> class Field {
 public:
  using Value = T<double>;
  using Jet = T<Dual>;

  Field() : Field([](const Point&) { return Value{}; }, [](const Point&) { return Jet{}; }) {}
  Field(std::function<Value(const Point&)> value, std::function<Jet(const Point&)> jet)
      : value_(std::move(value)), jet_(std::move(jet))
  {
  }

  Value operator()(const Point& p) const { return value_(p); }
  Jet jet(const Point& p) const { return jet_(p); }

  template <class S> T<S> at(const Point& p) const
  {
    if constexpr (std::is_same_v<S, double>)
      return value_(p);
    else
      return jet_(p);
  }

 private:
  std::function<Value(const Point&)> value_;
  std::function<Jet(const Point&)> jet_;
};

// Builds a Field from a generic callable f(point, scalar_tag) returning T<S>.
template <template <class> class T, class F> Field<T> make_field(F f)
{
  return Field<T>([f](const Point& p) { return T<double>(f(p, double{})); },
                  [f](const Point& p) { return T<Dual>(f(p, Dual{})); });
}

// Derivative of a sampled function by the five-point central stencil.
template <class V> V central_difference(const std::function<V(const Point&)>& f, const Point& p, int axis, double h)
{
  auto shifted = [&](double s) {
    Point q = p;
    q[static_cast<std::size_t>(axis)] += s * h;
    return f(q);
  };
  V m2 = shifted(-2), m1 = shifted(-1), p1 = shifted(1), p2 = shifted(2);
  using Ops = detail::ShapeOps<V>;
  V a = Ops::map2(m2, p2, [](double l, double r) { return r - l; });
  V b = Ops::map2(m1, p1, [](double l, double r) { return r - l; });
  return Ops::map2(a, b, [h](double da, double db) { return (8.0 * db - da) / (12.0 * h); });
}

// Field known only through samples; derivatives by fourth-order differences.
template <template <class> class T> Field<T> sampled_field(std::function<T<double>(const Point&)> f, double h)
{
  return Field<T>(f, [f, h](const Point& p) {
    return detail::ShapeOps<T<double>>::zip(f(p), central_difference<T<double>>(f, p, 0, h),
                                             central_difference<T<double>>(f, p, 1, h));
  });
}

using ScalarField = Field<Scalar>;

inline ScalarField scalar_field(const Expr& e)
{
  Expr ex = diff(e, Var::x), ey = diff(e, Var::y);
  return ScalarField([e](const Point& p) { return eval(e, p[0], p[1]); },
                     [e, ex, ey](const Point& p) {
                       return Dual(eval(e, p[0], p[1]), eval(ex, p[0], p[1]), eval(ey, p[0], p[1]));
                     });
}

inline ScalarField constant_field(double c)
{
  return ScalarField([c](const Point&) { return c; }, [c](const Point&) { return Dual(c); });
}

// ---------------------------------------------------------------------------
// Small 2x2 algebra, generic in the scalar.

template <class S> S det(const Mat2<S>& m) { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }

template <class S> Mat2<S> inverse(const Mat2<S>& m)
{
  S d = det(m);
  return {{{m[1][1] / d, -m[0][1] / d}, {-m[1][0] / d, m[0][0] / d}}};
}

template <class S> Mat2<S> matmul(const Mat2<S>& a, const Mat2<S>& b)
{
  Mat2<S> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

template <class S> Vec2<S> matvec(const Mat2<S>& a, const Vec2<S>& v)
{
  return {a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]};
}

template <class S> Mat2<S> transpose(const Mat2<S>& a) { return {{{a[0][0], a[1][0]}, {a[0][1], a[1][1]}}}; }

inline Mat2<double> identity2() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

}  // namespace metrise
