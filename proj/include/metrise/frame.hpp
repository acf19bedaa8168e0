#pragma once

// Forms on the oriented frame bundle, evaluated pointwise: the tautological
// form omega, the connection form theta of a chart connection, and the
// complex form zeta. Includes the sweeps that check their equivariance
// under right translation and their behaviour under projective change.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>

#include "metrise/field.hpp"
#include "metrise/tensor.hpp"

namespace metrise {

// Linear isomorphism u : R^2 -> T_x M, columns are the frame vectors.
struct FramePoint {
  Point x;
  Mat2<double> u;
};

struct FrameTangent {
  FramePoint base;
  Vec2<double> xdot;
  Mat2<double> udot;
};

class SingularFrame : public std::domain_error {
 public:
  SingularFrame() : std::domain_error("frame must be orientation preserving (det u > 0)") {}
};

inline void require_oriented(const FramePoint& f)
{
  if (!(det(f.u) > 0.0)) throw SingularFrame();
}

// omega(w) = u^-1 xdot
inline Vec2<double> taut_form(const FrameTangent& w)
{
  require_oriented(w.base);
  return matvec(inverse(w.base.u), w.xdot);
}

// theta(w) = u^-1 (udot + Gamma(xdot) u),  (Gamma(xdot) u)^k_j = Gamma^k_{lm} xdot^l u^m_j
inline Mat2<double> connection_form(const ConnectionField& gamma, const FrameTangent& w)
{
  require_oriented(w.base);
  Tensor21<double> g = gamma(w.base.x);
  Mat2<double> m = w.udot;
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j)
      for (int l = 0; l < 2; ++l)
        for (int n = 0; n < 2; ++n) m[k][j] += g[k][l][n] * w.xdot[l] * w.base.u[n][j];
  return matmul(inverse(w.base.u), m);
}

inline std::complex<double> zeta(const Mat2<double>& theta)
{
  return {theta[0][0] - theta[1][1], theta[0][1] + theta[1][0]};
}

inline std::complex<double> complex_form(const Vec2<double>& omega) { return {omega[0], omega[1]}; }

// Push a tangent through right translation R_a(u) = u a, a constant.
inline FrameTangent right_translate(const FrameTangent& w, const Mat2<double>& a)
{
  return {{w.base.x, matmul(w.base.u, a)}, w.xdot, matmul(w.udot, a)};
}

// r e^{i phi} as an element of GL(1,C) inside GL+(2,R).
inline Mat2<double> gl1c(double r, double phi)
{
  return {{{r * std::cos(phi), -r * std::sin(phi)}, {r * std::sin(phi), r * std::cos(phi)}}};
}

// Factor by which omega = w^1 + i w^2 transforms under R_{r e^{i phi}}:
// omega(R_a w) = a^-1 omega(w), and a^-1 acts on C as 1/(r e^{i phi}).
inline std::complex<double> omega_factor(double r, double phi) { return std::polar(1.0 / r, -phi); }

inline std::complex<double> zeta_factor(double phi) { return std::polar(1.0, -2.0 * phi); }

// ---------------------------------------------------------------------------
// Random samples. Matrices are R(t) diag(s1, s2) R(t') with singular values
// in [0.5, 2], which keeps the residual checks near machine precision.

inline Mat2<double> random_gl_plus(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi), scale(0.5, 2.0);
  Mat2<double> d{{{scale(rng), 0.0}, {0.0, scale(rng)}}};
  return matmul(matmul(gl1c(1.0, angle(rng)), d), gl1c(1.0, angle(rng)));
}

inline FrameTangent random_frame_tangent(const Chart& chart, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> ux(chart.x0, chart.x1), uy(chart.y0, chart.y1), unit(-1.0, 1.0);
  FrameTangent w;
  w.base.x = {ux(rng), uy(rng)};
  w.base.u = random_gl_plus(rng);
  w.xdot = {unit(rng), unit(rng)};
  w.udot = {{{unit(rng), unit(rng)}, {unit(rng), unit(rng)}}};
  return w;
}

struct EquivarianceResidual {
  double omega = 0.0;          // R_a^* omega = a^-1 omega, a in GL+(2)
  double theta = 0.0;          // R_a^* theta = a^-1 theta a
  double omega_complex = 0.0;  // R_{re^{i phi}}^* omega = (1/r) e^{-i phi} omega
  double zeta = 0.0;           // R_{re^{i phi}}^* zeta = e^{-2 i phi} zeta
  double max() const { return std::max({omega, theta, omega_complex, zeta}); }
};

inline EquivarianceResidual equivariance_sweep(const ConnectionField& gamma, int trials, std::uint64_t seed = 1)
{
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> radius(0.5, 2.0), angle(0.0, 2.0 * std::numbers::pi);
  EquivarianceResidual res;
  for (int t = 0; t < trials; ++t) {
    FrameTangent w = random_frame_tangent(gamma.chart, rng);
    Mat2<double> a = random_gl_plus(rng);
    FrameTangent wa = right_translate(w, a);

    Vec2<double> om = taut_form(w);
    res.omega = std::max(res.omega, max_abs_diff(taut_form(wa), matvec(inverse(a), om)));

    Mat2<double> th = connection_form(gamma, w);
    Mat2<double> conj = matmul(matmul(inverse(a), th), a);
    res.theta = std::max(res.theta, max_abs_diff(connection_form(gamma, wa), conj));

    double r = radius(rng), phi = angle(rng);
    FrameTangent wc = right_translate(w, gl1c(r, phi));
    std::complex<double> om_c = complex_form(taut_form(wc));
    res.omega_complex = std::max(res.omega_complex, std::abs(om_c - omega_factor(r, phi) * complex_form(om)));
    std::complex<double> z_c = zeta(connection_form(gamma, wc));
    res.zeta = std::max(res.zeta, std::abs(z_c - zeta_factor(phi) * zeta(th)));
  }
  return res;
}

// max |zeta' - zeta - (x1 + i x2) omega| where zeta' comes from gamma + Sym(xi)
// and (x1, x2) = u^T xi are the frame components of xi.
inline double projective_change_check(const ConnectionField& gamma, const OneForm& xi, int trials,
                                      std::uint64_t seed = 2)
{
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  ConnectionField changed = gamma + sym(xi);
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    FrameTangent w = random_frame_tangent(gamma.chart, rng);
    Vec2<double> x = matvec(transpose(w.base.u), xi(w.base.x));
    std::complex<double> expected = std::complex<double>(x[0], x[1]) * complex_form(taut_form(w));
    std::complex<double> diff = zeta(connection_form(changed, w)) - zeta(connection_form(gamma, w));
    worst = std::max(worst, std::abs(diff - expected));
  }
  return worst;
}

}  // namespace metrise
