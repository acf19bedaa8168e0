#pragma once

// Projective structures and the metrisability test.
//
// For a projective structure p and a metric g, p is represented by
// W + phi where W = LC(g) + g(x)B - Sym(beta) is the Weyl connection
// determined by [g] and phi is trace-free and g-symmetric. In a
// g-orthonormal oriented frame phi has the component table
//
//   A^1_11 =  a1   A^1_12 = -a2   A^1_22 = -a1
//   A^2_11 = -a2   A^2_12 = -a1   A^2_22 =  a2
//
// and the residual fields are a = a1 + i a2, b = (b1 - i b2)/2 with
// beta = b1 w^1 + b2 w^2. p is metrised by g iff a and b vanish.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>

#include "metrise/field.hpp"
#include "metrise/tensor.hpp"

namespace metrise {

struct ProjectiveStructure {
  ConnectionField representative;
  const Chart& chart() const { return representative.chart; }
};

inline void require_same_chart(const ProjectiveStructure& p, const MetricField& g)
{
  if (!p.chart().same_domain(g.chart)) throw ChartMismatch();
}

// ---------------------------------------------------------------------------
// Projective equivalence: G - G' = Sym(xi) with xi = tr(G - G')/3.

struct EquivalenceResult {
  bool equivalent = false;
  OneForm xi;
  double residual = 0.0;
};

inline EquivalenceResult projectively_equivalent(const ConnectionField& a, const ConnectionField& b, double tol)
{
  CubicTensor d = a - b;
  OneForm xi = (1.0 / 3.0) * trace(d);
  double residual = grid_sup(a.chart, [&](const Point& p) { return max_abs(trace_free_at(d(p))); });
  return {residual < tol, xi, residual};
}

// The representative of p that preserves sigma: G + Sym(alpha)/3.
inline ConnectionField volume_normalize(const ProjectiveStructure& p, const VolumeForm& sigma)
{
  OneForm alpha = volume_derivative(p.representative, sigma);
  return p.representative + sym((1.0 / 3.0) * alpha);
}

// ---------------------------------------------------------------------------
// Weyl decomposition, pointwise.

template <class S> struct WeylPoint {
  Mat2<S> g;
  Tensor21<S> levi_civita;
  Vec2<S> B;
  Vec2<S> beta;
  Tensor21<S> phi;
  Tensor21<S> weyl;
};

template <class S>
WeylPoint<S> weyl_point(const Tensor21<S>& gamma, const Mat2<S>& g, const std::array<Mat2<S>, 2>& dg)
{
  WeylPoint<S> w;
  w.g = g;
  w.levi_civita = levi_civita_at(g, dg);
  Tensor21<S> d = add_at(gamma, w.levi_civita, -1.0);
  Tensor21<S> d0 = trace_free_at(d);
  Mat2<S> ginv = inverse(g);
  for (int i = 0; i < 2; ++i) {
    S s{};
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) s += ginv[j][k] * d0[i][j][k];
    w.B[i] = S(0.75) * s;
  }
  w.beta = lower_at(g, w.B);
  Tensor21<S> gB = metric_times_vector_at(g, w.B);
  w.phi = trace_free_at(add_at(d, gB, -1.0));
  w.weyl = add_at(add_at(w.levi_civita, gB), sym_at(w.beta), -1.0);
  return w;
}

template <class S> WeylPoint<S> weyl_point(const ConnectionField& gamma, const MetricField& m, const Point& p)
{
  return weyl_point<S>(gamma.symbols.at<S>(p), m.g.at<S>(p), {m.dg[0].at<S>(p), m.dg[1].at<S>(p)});
}

// Oriented g-orthonormal frame (columns e1, e2) whose dual coframe starts
// from dx: w^1 = dx / |dx|_g. Rotated by `angle` when nonzero.
template <class S> Mat2<S> orthonormal_frame(const Mat2<S>& g, double angle = 0.0)
{
  using std::sqrt;
  S d = det(g);
  S g22 = g[1][1];
  Mat2<S> u{{{sqrt(g22 / d), S(0.0)}, {-g[0][1] / sqrt(g22 * d), S(1.0) / sqrt(g22)}}};
  if (angle == 0.0) return u;
  double c = std::cos(angle), s = std::sin(angle);
  Mat2<S> rot{{{S(c), S(-s)}, {S(s), S(c)}}};
  return matmul(u, rot);
}

// Components of a (1,2) tensor in the frame u: (u^-1)^i_a A^a_bc u^b_j u^c_k.
template <class S> Tensor21<S> frame_components(const Tensor21<S>& a, const Mat2<S>& u)
{
  Mat2<S> uinv = inverse(u);
  Tensor21<S> out{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        S s{};
        for (int q = 0; q < 2; ++q)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) s += uinv[i][q] * a[q][b][c] * u[b][j] * u[c][k];
        out[i][j][k] = s;
      }
  return out;
}

struct ResidualPoint {
  std::complex<double> a;
  std::complex<double> b;
  Tensor21<double> phi_frame;  // A^i_{jk}
  Vec2<double> beta_frame;     // b_i
};

inline ResidualPoint residuals_at(const ConnectionField& gamma, const MetricField& m, const Point& p,
                                  double frame_angle = 0.0)
{
  WeylPoint<double> w = weyl_point<double>(gamma, m, p);
  Mat2<double> u = orthonormal_frame(w.g, frame_angle);
  ResidualPoint r;
  r.phi_frame = frame_components(w.phi, u);
  r.beta_frame = {w.beta[0] * u[0][0] + w.beta[1] * u[1][0], w.beta[0] * u[0][1] + w.beta[1] * u[1][1]};
  r.a = {r.phi_frame[0][0][0], r.phi_frame[1][1][1]};
  r.b = 0.5 * std::complex<double>(r.beta_frame[0], -r.beta_frame[1]);
  return r;
}

using ComplexField = std::function<std::complex<double>(const Point&)>;

struct WeylDecomposition {
  VectorField B;
  OneForm beta;
  CubicTensor phi;
  ConnectionField weyl;
  ComplexField a;
  ComplexField b;
};

inline WeylDecomposition weyl_decompose(const ProjectiveStructure& p, const MetricField& m)
{
  require_same_chart(p, m);
  require_positive_definite(m);
  const ConnectionField& gamma = p.representative;
  WeylDecomposition w;
  w.B = {make_field<Vec2>([gamma, m](const Point& x, auto tag) {
    using S = decltype(tag);
    return weyl_point<S>(gamma, m, x).B;
  })};
  w.beta = {make_field<Vec2>([gamma, m](const Point& x, auto tag) {
    using S = decltype(tag);
    return weyl_point<S>(gamma, m, x).beta;
  })};
  w.phi = {make_field<Tensor21>([gamma, m](const Point& x, auto tag) {
    using S = decltype(tag);
    return weyl_point<S>(gamma, m, x).phi;
  })};
  w.weyl = {m.chart, make_field<Tensor21>([gamma, m](const Point& x, auto tag) {
              using S = decltype(tag);
              return weyl_point<S>(gamma, m, x).weyl;
            })};
  w.a = [gamma, m](const Point& x) { return residuals_at(gamma, m, x).a; };
  w.b = [gamma, m](const Point& x) { return residuals_at(gamma, m, x).b; };
  return w;
}

inline std::pair<ComplexField, ComplexField> residuals_ab(const ProjectiveStructure& p, const MetricField& m)
{
  WeylDecomposition w = weyl_decompose(p, m);
  return {w.a, w.b};
}

// ---------------------------------------------------------------------------
// Metrisability verdict.

struct MetrisabilityReport {
  bool verdict = false;
  double sup_a = 0.0;
  double sup_b = 0.0;
  bool weyl_only_verdict = false;  // p contains a Weyl connection for [g]
  int grid_nx = 0, grid_ny = 0;
  double tol = 0.0;
};

inline constexpr double default_tol = 1e-6;

inline MetrisabilityReport check_metrisable_by(const ProjectiveStructure& p, const MetricField& m,
                                               double tol = default_tol)
{
  require_same_chart(p, m);
  require_positive_definite(m);
  const Chart& chart = m.chart;
  std::vector<double> sa(static_cast<std::size_t>(chart.nx)), sb(static_cast<std::size_t>(chart.nx));
  parallel_for(static_cast<std::size_t>(chart.nx), [&](std::size_t i) {
    double ma = 0.0, mb = 0.0;
    for (int j = 0; j < chart.ny; ++j) {
      ResidualPoint r = residuals_at(p.representative, m, chart.grid_point(static_cast<int>(i), j));
      ma = std::max(ma, std::abs(r.a));
      mb = std::max(mb, std::abs(r.b));
    }
    sa[i] = ma;
    sb[i] = mb;
  });
  MetrisabilityReport rep;
  rep.sup_a = *std::max_element(sa.begin(), sa.end());
  rep.sup_b = *std::max_element(sb.begin(), sb.end());
  rep.weyl_only_verdict = rep.sup_a < tol;
  rep.verdict = rep.sup_a < tol && rep.sup_b < tol;
  rep.grid_nx = chart.nx;
  rep.grid_ny = chart.ny;
  rep.tol = tol;
  return rep;
}

// Max grid difference between the dA_g-normalized representative and
// LC(g) + g(x)B - Sym(beta)/3 + phi.
inline double normalized_representative_check(const ProjectiveStructure& p, const MetricField& m)
{
  require_same_chart(p, m);
  ConnectionField lhs = volume_normalize(p, area_form(m));
  return grid_sup(m.chart, [&](const Point& x) {
    WeylPoint<double> w = weyl_point<double>(p.representative, m, x);
    Tensor21<double> rhs = add_at(w.levi_civita, metric_times_vector_at(w.g, w.B));
    rhs = add_at(rhs, sym_at(w.beta), -1.0 / 3.0);
    rhs = add_at(rhs, w.phi);
    return max_abs_diff(lhs(x), rhs);
  });
}

}  // namespace metrise
