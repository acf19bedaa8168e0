#pragma once

// Tensor fields on a chart: metrics, connections, difference tensors
// S^2(T*M) (x) TM, one-forms, vector fields, volume forms, and the algebra
// relating them (Sym, trace, trace-free projection, Levi-Civita, curvature).

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "metrise/expr.hpp"
#include "metrise/field.hpp"

namespace metrise {

struct OneForm {
  Field<Vec2> components;
  Vec2<double> operator()(const Point& p) const { return components(p); }
};

struct VectorField {
  Field<Vec2> components;
  Vec2<double> operator()(const Point& p) const { return components(p); }
};

// Sections of S^2(T*M) (x) TM, stored as A[i][j][k] = A^i_{jk}.
struct CubicTensor {
  Field<Tensor21> components;
  Tensor21<double> operator()(const Point& p) const { return components(p); }
};

// Torsion-free connection: Christoffel symbols G[i][j][k] = Gamma^i_{jk}.
struct ConnectionField {
  Chart chart;
  Field<Tensor21> symbols;
  Tensor21<double> operator()(const Point& p) const { return symbols(p); }
};

// sigma = density * dx^dy, carried with the gradient of log(density).
struct VolumeForm {
  ScalarField density;
  Field<Vec2> log_gradient;
};

// Symmetric metric g with its first partials dg[k] = d_k g as fields of
// their own, so Levi-Civita symbols keep exact first derivatives.
struct MetricField {
  Chart chart;
  Field<Mat2> g;
  std::array<Field<Mat2>, 2> dg;
  Mat2<double> operator()(const Point& p) const { return g(p); }
};

class NotPositiveDefinite : public std::domain_error {
 public:
  explicit NotPositiveDefinite(const Point& p)
      : std::domain_error(message(p)), point_(p)
  {
  }
  const Point& point() const { return point_; }

 private:
  static std::string message(const Point& p)
  {
    std::ostringstream os;
    os.precision(17);
    os << "metric is not positive definite at (" << p[0] << ", " << p[1] << ")";
    return os.str();
  }
  Point point_;
};

// ---------------------------------------------------------------------------
// Pointwise kernels.

template <class S> Tensor21<S> sym_at(const Vec2<S>& xi)
{
  Tensor21<S> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        S v{};
        if (i == j) v += xi[k];
        if (i == k) v += xi[j];
        out[i][j][k] = v;
      }
  return out;
}

// (tr A)_j = A^k_{jk}
template <class S> Vec2<S> trace_at(const Tensor21<S>& a)
{
  return {a[0][0][0] + a[1][0][1], a[0][1][0] + a[1][1][1]};
}

template <class S> Tensor21<S> add_at(const Tensor21<S>& a, const Tensor21<S>& b, double scale = 1.0)
{
  Tensor21<S> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out[i][j][k] = a[i][j][k] + S(scale) * b[i][j][k];
  return out;
}

template <class S> Tensor21<S> trace_free_at(const Tensor21<S>& a)
{
  return add_at(a, sym_at(trace_at(a)), -1.0 / 3.0);
}

// (g (x) B)^i_{jk} = g_{jk} B^i
template <class S> Tensor21<S> metric_times_vector_at(const Mat2<S>& g, const Vec2<S>& b)
{
  Tensor21<S> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) out[i][j][k] = g[j][k] * b[i];
  return out;
}

template <class S> Vec2<S> lower_at(const Mat2<S>& g, const Vec2<S>& b) { return matvec(g, b); }
template <class S> Vec2<S> raise_at(const Mat2<S>& g, const Vec2<S>& beta) { return matvec(inverse(g), beta); }

// Gamma^i_{jk} = 1/2 g^{il} (d_j g_{lk} + d_k g_{lj} - d_l g_{jk})
template <class S> Tensor21<S> levi_civita_at(const Mat2<S>& g, const std::array<Mat2<S>, 2>& dg)
{
  Mat2<S> ginv = inverse(g);
  Tensor21<S> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        S s{};
        for (int l = 0; l < 2; ++l) s += ginv[i][l] * (dg[j][l][k] + dg[k][l][j] - dg[l][j][k]);
        out[i][j][k] = S(0.5) * s;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Constructors.

inline Field<Vec2> vec2_field(const Expr& e0, const Expr& e1)
{
  ScalarField f0 = scalar_field(e0), f1 = scalar_field(e1);
  return make_field<Vec2>([f0, f1](const Point& p, auto tag) {
    using S = decltype(tag);
    return Vec2<S>{f0.at<S>(p), f1.at<S>(p)};
  });
}

inline OneForm one_form(const Expr& xi1, const Expr& xi2) { return {vec2_field(xi1, xi2)}; }
inline VectorField vector_field(const Expr& b1, const Expr& b2) { return {vec2_field(b1, b2)}; }

// Components ordered (111, 112, 122, 211, 212, 222), i.e. A^i_{jk} with j <= k.
inline Field<Tensor21> tensor21_field(const std::array<Expr, 6>& c)
{
  std::array<ScalarField, 6> f;
  for (std::size_t n = 0; n < 6; ++n) f[n] = scalar_field(c[n]);
  return make_field<Tensor21>([f](const Point& p, auto tag) {
    using S = decltype(tag);
    Tensor21<S> out{};
    for (int i = 0; i < 2; ++i) {
      out[i][0][0] = f[3 * i].at<S>(p);
      out[i][0][1] = out[i][1][0] = f[3 * i + 1].at<S>(p);
      out[i][1][1] = f[3 * i + 2].at<S>(p);
    }
    return out;
  });
}

inline CubicTensor cubic_tensor(const std::array<Expr, 6>& c) { return {tensor21_field(c)}; }

inline ConnectionField connection(const Chart& chart, const std::array<Expr, 6>& c)
{
  return {chart, tensor21_field(c)};
}

inline ConnectionField flat_connection(const Chart& chart)
{
  return connection(chart, {Expr(0.0), Expr(0.0), Expr(0.0), Expr(0.0), Expr(0.0), Expr(0.0)});
}

inline VolumeForm volume_form(const Expr& density)
{
  return {scalar_field(density), vec2_field(diff(density, Var::x) / density, diff(density, Var::y) / density)};
}

inline VolumeForm coordinate_area() { return volume_form(Expr(1.0)); }

// Rejects a metric that fails g11 > 0, det g > 0 somewhere on the chart grid.
inline void require_positive_definite(const MetricField& m)
{
  const Chart& c = m.chart;
  for (int i = 0; i < c.nx; ++i)
    for (int j = 0; j < c.ny; ++j) {
      Point p = c.grid_point(i, j);
      Mat2<double> g = m.g(p);
      if (!(g[0][0] > 0.0) || !(det(g) > 0.0) || std::abs(g[0][1] - g[1][0]) > 0.0) throw NotPositiveDefinite(p);
    }
}

inline MetricField metric(const Chart& chart, const Expr& g11, const Expr& g12, const Expr& g22)
{
  const std::array<Expr, 3> comp{g11, g12, g22};
  std::array<Expr, 3> cx, cy, cxx, cxy, cyy;
  for (std::size_t n = 0; n < 3; ++n) {
    cx[n] = diff(comp[n], Var::x);
    cy[n] = diff(comp[n], Var::y);
    cxx[n] = diff(cx[n], Var::x);
    cxy[n] = diff(cx[n], Var::y);
    cyy[n] = diff(cy[n], Var::y);
  }
  auto value_of_exprs = [](const std::array<Expr, 3>& e, const Point& p) {
    double a = eval(e[0], p[0], p[1]), b = eval(e[1], p[0], p[1]), d = eval(e[2], p[0], p[1]);
    return Mat2<double>{{{a, b}, {b, d}}};
  };
  auto field_of = [value_of_exprs](std::array<Expr, 3> v, std::array<Expr, 3> dx, std::array<Expr, 3> dy) {
    return Field<Mat2>([v, value_of_exprs](const Point& p) { return value_of_exprs(v, p); },
                       [v, dx, dy, value_of_exprs](const Point& p) {
                         return detail::ShapeOps<Mat2<double>>::zip(value_of_exprs(v, p), value_of_exprs(dx, p),
                                                                    value_of_exprs(dy, p));
                       });
  };
  MetricField m{chart, field_of(comp, cx, cy), {field_of(cx, cxx, cxy), field_of(cy, cxy, cyy)}};
  require_positive_definite(m);
  return m;
}

// Metric known only by samples; all derivatives by fourth-order differences.
inline MetricField sampled_metric(const Chart& chart, std::function<Mat2<double>(const Point&)> f, double h)
{
  std::array<Field<Mat2>, 2> dg;
  for (int k = 0; k < 2; ++k) {
    std::function<Mat2<double>(const Point&)> dk = [f, h, k](const Point& p) {
      return central_difference<Mat2<double>>(f, p, k, h);
    };
    dg[static_cast<std::size_t>(k)] = sampled_field<Mat2>(dk, h);
  }
  MetricField m{chart, sampled_field<Mat2>(f, h), dg};
  require_positive_definite(m);
  return m;
}

// Metric given by a function with exact first derivatives (Dual jet). First
// partials are exact; second partials by differencing the exact first ones.
inline MetricField jet_metric(const Chart& chart, std::function<Mat2<Dual>(const Point&)> jet, double h)
{
  using Ops = detail::ShapeOps<Mat2<double>>;
  std::function<Mat2<double>(const Point&)> value = [jet](const Point& p) { return Ops::value(jet(p)); };
  std::array<Field<Mat2>, 2> dg;
  for (int k = 0; k < 2; ++k) {
    std::function<Mat2<double>(const Point&)> dk = [jet, k](const Point& p) { return Ops::deriv(jet(p), k); };
    dg[static_cast<std::size_t>(k)] = sampled_field<Mat2>(dk, h);
  }
  MetricField m{chart, Field<Mat2>(value, jet), dg};
  require_positive_definite(m);
  return m;
}

// ---------------------------------------------------------------------------
// Algebra on fields.

inline CubicTensor sym(const OneForm& xi)
{
  return {make_field<Tensor21>([xi](const Point& p, auto tag) {
    using S = decltype(tag);
    return sym_at<S>(xi.components.at<S>(p));
  })};
}

inline OneForm trace(const CubicTensor& a)
{
  return {make_field<Vec2>([a](const Point& p, auto tag) {
    using S = decltype(tag);
    return trace_at<S>(a.components.at<S>(p));
  })};
}

inline CubicTensor trace_free(const CubicTensor& a)
{
  return {make_field<Tensor21>([a](const Point& p, auto tag) {
    using S = decltype(tag);
    return trace_free_at<S>(a.components.at<S>(p));
  })};
}

inline CubicTensor operator+(const CubicTensor& a, const CubicTensor& b)
{
  return {make_field<Tensor21>([a, b](const Point& p, auto tag) {
    using S = decltype(tag);
    return add_at<S>(a.components.at<S>(p), b.components.at<S>(p));
  })};
}

inline CubicTensor operator*(double c, const CubicTensor& a)
{
  return {make_field<Tensor21>([a, c](const Point& p, auto tag) {
    using S = decltype(tag);
    return add_at<S>(Tensor21<S>{}, a.components.at<S>(p), c);
  })};
}

inline CubicTensor operator-(const CubicTensor& a, const CubicTensor& b) { return a + (-1.0) * b; }

inline OneForm operator*(double c, const OneForm& xi)
{
  return {make_field<Vec2>([xi, c](const Point& p, auto tag) {
    using S = decltype(tag);
    Vec2<S> v = xi.components.at<S>(p);
    return Vec2<S>{S(c) * v[0], S(c) * v[1]};
  })};
}

inline ConnectionField operator+(const ConnectionField& gamma, const CubicTensor& a)
{
  return {gamma.chart, make_field<Tensor21>([gamma, a](const Point& p, auto tag) {
            using S = decltype(tag);
            return add_at<S>(gamma.symbols.at<S>(p), a.components.at<S>(p));
          })};
}

inline ConnectionField operator-(const ConnectionField& gamma, const CubicTensor& a) { return gamma + (-1.0) * a; }

inline CubicTensor operator-(const ConnectionField& a, const ConnectionField& b)
{
  if (!a.chart.same_domain(b.chart)) throw ChartMismatch();
  return {make_field<Tensor21>([a, b](const Point& p, auto tag) {
    using S = decltype(tag);
    return add_at<S>(a.symbols.at<S>(p), b.symbols.at<S>(p), -1.0);
  })};
}

inline CubicTensor metric_times_vector(const MetricField& g, const VectorField& b)
{
  return {make_field<Tensor21>([g, b](const Point& p, auto tag) {
    using S = decltype(tag);
    return metric_times_vector_at<S>(g.g.at<S>(p), b.components.at<S>(p));
  })};
}

inline OneForm lower(const MetricField& g, const VectorField& b)
{
  return {make_field<Vec2>([g, b](const Point& p, auto tag) {
    using S = decltype(tag);
    return lower_at<S>(g.g.at<S>(p), b.components.at<S>(p));
  })};
}

inline VectorField raise(const MetricField& g, const OneForm& beta)
{
  return {make_field<Vec2>([g, beta](const Point& p, auto tag) {
    using S = decltype(tag);
    return raise_at<S>(g.g.at<S>(p), beta.components.at<S>(p));
  })};
}

inline ConnectionField levi_civita(const MetricField& m)
{
  require_positive_definite(m);
  return {m.chart, make_field<Tensor21>([m](const Point& p, auto tag) {
            using S = decltype(tag);
            return levi_civita_at<S>(m.g.at<S>(p), {m.dg[0].at<S>(p), m.dg[1].at<S>(p)});
          })};
}

// Riemann tensor R[i][j][k][l] = R^i_{jkl}
//   = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}
using Riemann = std::array<std::array<Mat2<double>, 2>, 2>;

inline Riemann curvature(const ConnectionField& gamma, const Point& p)
{
  Tensor21<Dual> g = gamma.symbols.jet(p);
  Riemann r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
          double v = g[i][l][j].d[k] - g[i][k][j].d[l];
          for (int m = 0; m < 2; ++m) v += g[i][k][m].v * g[m][l][j].v - g[i][l][m].v * g[m][k][j].v;
          r[i][j][k][l] = v;
        }
  return r;
}

// K = g^{jl} R^i_{jil} / 2
inline double gauss_curvature(const MetricField& m, const Point& p)
{
  Riemann r = curvature(levi_civita(m), p);
  Mat2<double> ginv = inverse(m.g(p));
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l) s += ginv[j][l] * r[i][j][i][l];
  return 0.5 * s;
}

// alpha with  nabla sigma = alpha (x) sigma:  alpha_k = d_k log s - Gamma^m_{km}
inline OneForm volume_derivative(const ConnectionField& gamma, const VolumeForm& sigma)
{
  return {make_field<Vec2>([gamma, sigma](const Point& p, auto tag) {
    using S = decltype(tag);
    Tensor21<S> g = gamma.symbols.at<S>(p);
    Vec2<S> dl = sigma.log_gradient.at<S>(p);
    return Vec2<S>{dl[0] - g[0][0][0] - g[1][0][1], dl[1] - g[0][1][0] - g[1][1][1]};
  })};
}

// dA_g = sqrt(det g) dx^dy
inline VolumeForm area_form(const MetricField& m)
{
  ScalarField density = make_field<Scalar>([m](const Point& p, auto tag) {
    using S = decltype(tag);
    using std::sqrt;
    return sqrt(det(m.g.at<S>(p)));
  });
  Field<Vec2> dlog = make_field<Vec2>([m](const Point& p, auto tag) {
    using S = decltype(tag);
    Mat2<S> ginv = inverse(m.g.at<S>(p));
    Vec2<S> out{};
    for (std::size_t k = 0; k < 2; ++k) {
      Mat2<S> d = m.dg[k].at<S>(p);
      S tr{};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) tr += ginv[a][b] * d[b][a];
      out[k] = S(0.5) * tr;
    }
    return out;
  });
  return {density, dlog};
}

// max over the grid of |d_k g_ij - Gamma^l_{ki} g_lj - Gamma^l_{kj} g_il|
inline double metric_compatibility_residual(const MetricField& m, const ConnectionField& gamma)
{
  return grid_sup(m.chart, [&](const Point& p) {
    Mat2<double> g = m.g(p);
    Tensor21<double> G = gamma(p);
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
      Mat2<double> d = m.dg[static_cast<std::size_t>(k)](p);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          double r = d[i][j];
          for (int l = 0; l < 2; ++l) r -= G[l][k][i] * g[l][j] + G[l][k][j] * g[i][l];
          worst = std::max(worst, std::abs(r));
        }
    }
    return worst;
  });
}

}  // namespace metrise
