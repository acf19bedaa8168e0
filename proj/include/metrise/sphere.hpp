#pragma once

// The unit tangent bundle T1S^2 with its canonical coframe (w1, w2, psi),
// Liouville's system for metrics with great-circle geodesics, its closed
// form solutions H = Xi^-1 C Xi^-t, and the resulting metrics on S^2.
//
// A unit tangent is a pair (x, v) in R^3 with |x| = |v| = 1, x.v = 0, and
// w = x cross v. Along a curve, w1 = v.x', w2 = w.x', psi = w.v'.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "metrise/field.hpp"
#include "metrise/geodesic.hpp"
#include "metrise/tensor.hpp"

namespace metrise {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

class UnitTangentError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct UnitTangent {
  Vec3 x;
  Vec3 v;
  Vec3 w() const { return x.cross(v); }

  void validate(double tol = 1e-12) const
  {
    if (std::abs(x.norm() - 1.0) > tol || std::abs(v.norm() - 1.0) > tol || std::abs(x.dot(v)) > tol)
      throw UnitTangentError("(x, v) is not a unit tangent vector of the sphere");
  }
};

// Gram-Schmidt onto T1S^2.
inline UnitTangent make_unit_tangent(const Vec3& x, const Vec3& v)
{
  Vec3 xn = x.normalized();
  Vec3 vn = v - v.dot(xn) * xn;
  if (!(x.norm() > 0.0) || !(vn.norm() > 1e-14)) throw UnitTangentError("x and v must be independent");
  return {xn, vn.normalized()};
}

inline UnitTangent random_unit_tangent(std::mt19937_64& rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 x(n(rng), n(rng), n(rng)), v(n(rng), n(rng), n(rng));
    if (x.norm() < 1e-3) continue;
    Vec3 xn = x.normalized();
    Vec3 vp = v - v.dot(xn) * xn;
    if (vp.norm() < 1e-3) continue;
    return {xn, vp.normalized()};
  }
}

// ---------------------------------------------------------------------------
// Canonical flows, dual to (w1, w2, psi).

enum class Flow { geodesic, transverse, fiber };

inline UnitTangent canonical_flow(const UnitTangent& t, Flow f, double s)
{
  double c = std::cos(s), sn = std::sin(s);
  Vec3 w = t.w();
  switch (f) {
    case Flow::geodesic:
      return {t.x * c + t.v * sn, -t.x * sn + t.v * c};
    case Flow::transverse:
      return {t.x * c + w * sn, t.v};
    case Flow::fiber:
      return {t.x, t.v * c + w * sn};
  }
  throw std::invalid_argument("unknown flow");
}

// theta = [[0, -w1, -w2], [w1, 0, -psi], [w2, psi, 0]]
inline Mat3 theta_pattern(double w1, double w2, double psi)
{
  Mat3 m;
  m << 0.0, -w1, -w2, w1, 0.0, -psi, w2, psi, 0.0;
  return m;
}

inline Mat3 generator(Flow f)
{
  switch (f) {
    case Flow::geodesic:
      return theta_pattern(1.0, 0.0, 0.0);
    case Flow::transverse:
      return theta_pattern(0.0, 1.0, 0.0);
    case Flow::fiber:
      return theta_pattern(0.0, 0.0, 1.0);
  }
  throw std::invalid_argument("unknown flow");
}

inline Mat3 generator(const Vec3& c) { return theta_pattern(c[0], c[1], c[2]); }

// exp of an antisymmetric matrix.
inline Mat3 exp_so3(const Mat3& k)
{
  Vec3 axis(k(2, 1), k(0, 2), k(1, 0));
  double angle = axis.norm();
  if (angle == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, axis / angle).toRotationMatrix();
}

// ---------------------------------------------------------------------------
// Xi : T1S^2 -> SO(3). The arrangement of (x, v, x cross v) is fixed by
// searching for the candidate whose Xi^-1 dXi reproduces theta_pattern
// along the canonical flows.

struct XiConvention {
  bool columns = true;
  int order = 0;  // 0: (x, v, w)  1: (v, w, x)  2: (w, x, v)
  int sign = 1;   // applied to w

  std::string name() const
  {
    static const char* orders[3] = {"(x, v, s*w)", "(v, s*w, x)", "(s*w, x, v)"};
    std::string o = orders[order];
    o.replace(o.find("s*w"), 3, sign > 0 ? "x cross v" : "-(x cross v)");
    return std::string(columns ? "columns " : "rows ") + o;
  }
  friend bool operator==(const XiConvention&, const XiConvention&) = default;
};

inline std::vector<XiConvention> xi_candidates()
{
  std::vector<XiConvention> out;
  for (bool columns : {true, false})
    for (int order = 0; order < 3; ++order)
      for (int sign : {1, -1}) out.push_back({columns, order, sign});
  return out;
}

namespace detail {

template <class V> std::array<V, 3> xi_slots(const V& x, const V& v, const V& w, int order)
{
  switch (order) {
    case 0:
      return {x, v, w};
    case 1:
      return {v, w, x};
    default:
      return {w, x, v};
  }
}

}  // namespace detail

inline Mat3 xi_matrix(const UnitTangent& t, const XiConvention& conv)
{
  auto s = detail::xi_slots<Vec3>(t.x, t.v, conv.sign * t.w(), conv.order);
  Mat3 m;
  for (int k = 0; k < 3; ++k) {
    if (conv.columns)
      m.col(k) = s[static_cast<std::size_t>(k)];
    else
      m.row(k) = s[static_cast<std::size_t>(k)].transpose();
  }
  return m;
}

inline UnitTangent unit_tangent_from_xi(const Mat3& m, const XiConvention& conv)
{
  std::array<Vec3, 3> s;
  for (int k = 0; k < 3; ++k) s[static_cast<std::size_t>(k)] = conv.columns ? Vec3(m.col(k)) : Vec3(m.row(k));
  static const int x_slot[3] = {0, 2, 1}, v_slot[3] = {1, 0, 2};
  return {s[static_cast<std::size_t>(x_slot[conv.order])], s[static_cast<std::size_t>(v_slot[conv.order])]};
}

struct ConventionTrial {
  XiConvention convention;
  double det = 0.0;
  double pattern_error = 0.0;
  bool accepted = false;
};

struct ConventionSearch {
  std::vector<ConventionTrial> trials;
  XiConvention chosen;
};

inline ConventionSearch search_xi_convention(double fd_step = 1e-4, double tol = 1e-6, int points = 20)
{
  std::mt19937_64 rng(11);
  std::vector<UnitTangent> sample;
  for (int n = 0; n < points; ++n) sample.push_back(random_unit_tangent(rng));
  ConventionSearch out;
  bool found = false;
  for (const XiConvention& c : xi_candidates()) {
    ConventionTrial trial{c, xi_matrix(sample.front(), c).determinant(), 0.0, false};
    for (const UnitTangent& t : sample) {
      Mat3 xi = xi_matrix(t, c);
      for (Flow f : {Flow::geodesic, Flow::transverse, Flow::fiber}) {
        Mat3 d = (xi_matrix(canonical_flow(t, f, fd_step), c) - xi_matrix(canonical_flow(t, f, -fd_step), c)) /
                 (2.0 * fd_step);
        trial.pattern_error = std::max(trial.pattern_error, (xi.transpose() * d - generator(f)).cwiseAbs().maxCoeff());
      }
    }
    trial.accepted = !found && std::abs(trial.det - 1.0) < 1e-12 && trial.pattern_error < tol;
    if (trial.accepted) {
      out.chosen = c;
      found = true;
    }
    out.trials.push_back(trial);
  }
  if (!found) throw std::logic_error("no arrangement of (x, v, x cross v) reproduces the coframe pattern");
  return out;
}

inline const ConventionSearch& xi_convention_search()
{
  static const ConventionSearch search = search_xi_convention();
  return search;
}

inline const XiConvention& xi_convention() { return xi_convention_search().chosen; }

inline Mat3 xi_frame(const UnitTangent& t)
{
  t.validate();
  return xi_matrix(t, xi_convention());
}

// (w1, w2, psi) of an ambient tangent dXi at Xi, read off Xi^t dXi.
inline Vec3 coframe(const Mat3& xi, const Mat3& dxi)
{
  Mat3 th = xi.transpose() * dxi;
  return {th(1, 0), th(2, 0), th(2, 1)};
}

// Flow of the left-invariant field c1 E1 + c2 E2 + c3 Epsi.
inline UnitTangent left_invariant_flow(const UnitTangent& t, const Vec3& c, double s)
{
  return unit_tangent_from_xi(xi_frame(t) * exp_so3(s * generator(c)), xi_convention());
}

// ---------------------------------------------------------------------------
// Structure equations dw1 = -w2^psi, dw2 = -psi^w1, dpsi = -w1^w2, checked
// with dA(X, Y) = X(A(Y)) - Y(A(X)) - A([X, Y]) and central differences
// along the flows of random left-invariant fields X, Y.

inline double structure_equation_residual(double h, int pairs = 20, std::uint64_t seed = 3)
{
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int n = 0; n < pairs; ++n) {
    Mat3 F = xi_frame(random_unit_tangent(rng));
    Mat3 X = generator(Vec3(unit(rng), unit(rng), unit(rng)));
    Mat3 Y = generator(Vec3(unit(rng), unit(rng), unit(rng)));
    Mat3 Xp = F * exp_so3(h * X), Xm = F * exp_so3(-h * X);
    Mat3 Yp = F * exp_so3(h * Y), Ym = F * exp_so3(-h * Y);

    Vec3 aX = coframe(F, F * X), aY = coframe(F, F * Y);
    Vec3 X_aY = (coframe(Xp, Xp * Y) - coframe(Xm, Xm * Y)) / (2.0 * h);
    Vec3 Y_aX = (coframe(Yp, Yp * X) - coframe(Ym, Ym * X)) / (2.0 * h);
    Mat3 bracket = ((Xp - Xm) * Y - (Yp - Ym) * X) / (2.0 * h);
    Vec3 d = X_aY - Y_aX - coframe(F, bracket);

    auto wedge = [&](int i, int j) { return aX[i] * aY[j] - aX[j] * aY[i]; };
    Vec3 rhs(-wedge(1, 2), -wedge(2, 0), -wedge(0, 1));
    worst = std::max(worst, (d - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Metrics on S^2 described on T1S^2 by their components in the round
// orthonormal coframe:  g = p w1 w1 + 2 r w1 w2 + q w2 w2.

struct SphereMetricSample {
  double p = 1.0, q = 1.0, r = 0.0;
  bool positive_definite() const { return p > 0.0 && q > 0.0 && p * q - r * r > 0.0; }
};

using SphereMetric = std::function<SphereMetricSample(const UnitTangent&)>;

class IndefiniteMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct LiouvilleSolution {
  Mat3 A;
  Mat3 C;
  Mat3 H(const UnitTangent& t) const
  {
    Mat3 xi = xi_frame(t);
    return xi.transpose() * C * xi;
  }
};

inline LiouvilleSolution liouville_solution(const Mat3& A)
{
  if (!A.allFinite() || std::abs(A.determinant()) < 1e-12) throw std::invalid_argument("A must be invertible");
  return {A, A * A.transpose()};
}

// A with entries uniform in [-1, 1], |det| >= 0.1, rescaled to det 1.
inline Mat3 random_sl3(std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (;;) {
    Mat3 a;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a(i, j) = unit(rng);
    double d = a.determinant();
    if (std::abs(d) < 0.1) continue;
    return a / std::cbrt(d);
  }
}

namespace detail {

template <class S> using V3 = std::array<S, 3>;

template <class S> S dot3(const V3<S>& a, const V3<S>& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

template <class S> V3<S> cross3(const V3<S>& a, const V3<S>& b)
{
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class S> V3<S> scale3(const V3<S>& a, S s) { return {a[0] * s, a[1] * s, a[2] * s}; }

template <class S> V3<S> mul3(const Mat3& m, const V3<S>& a)
{
  V3<S> out;
  for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] = S(m(i, 0)) * a[0] + S(m(i, 1)) * a[1] + S(m(i, 2)) * a[2];
  return out;
}

template <class S> V3<S> normalize3(const V3<S>& a)
{
  using std::sqrt;
  return scale3(a, S(1.0) / sqrt(dot3(a, a)));
}

// (h11, h12, h22) read from H = Xi^t C Xi through the layout
//   H = [[h, h2, -h1], [h2, -h22, h12], [-h1, h12, -h11]].
template <class S> std::array<S, 3> h_block(const Mat3& C, const V3<S>& x, const V3<S>& v, const XiConvention& conv)
{
  V3<S> w = scale3(cross3(x, v), S(static_cast<double>(conv.sign)));
  auto s = xi_slots<V3<S>>(x, v, w, conv.order);
  // (Xi^t C Xi)_{ij} with Xi assembled from the slots as columns or rows.
  auto entry = [&](int i, int j) {
    if (conv.columns) return dot3(s[static_cast<std::size_t>(i)], mul3(C, s[static_cast<std::size_t>(j)]));
    S out{};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        out += s[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] * S(C(a, b)) *
               s[static_cast<std::size_t>(b)][static_cast<std::size_t>(j)];
    return out;
  };
  return {-entry(2, 2), entry(1, 2), -entry(1, 1)};
}

}  // namespace detail

// Overall sign eps in {+1, -1} making eps * h positive definite.
inline int metric_sign(double h11, double h12, double h22)
{
  double d = h11 * h22 - h12 * h12;
  if (!(d > 0.0)) throw IndefiniteMetric("h11 h22 - h12^2 must be positive");
  return h11 > 0.0 ? 1 : -1;
}

template <class S>
std::array<S, 3> metric_from_h(const S& h11, const S& h12, const S& h22)
{
  int eps = metric_sign(value_of(h11), value_of(h12), value_of(h22));
  S d = h11 * h22 - h12 * h12;
  S f = S(static_cast<double>(eps)) / (d * d);
  return {f * h11, f * h22, f * h12};  // p, q, r
}

inline int metric_sign(const LiouvilleSolution& sol, const UnitTangent& t)
{
  t.validate();
  auto h = detail::h_block<double>(sol.C, {t.x[0], t.x[1], t.x[2]}, {t.v[0], t.v[1], t.v[2]}, xi_convention());
  return metric_sign(h[0], h[1], h[2]);
}

inline SphereMetricSample metric_from_solution(const LiouvilleSolution& sol, const UnitTangent& t)
{
  Mat3 H = sol.H(t);
  auto m = metric_from_h(-H(2, 2), H(1, 2), -H(1, 1));
  return {m[0], m[1], m[2]};
}

// A metric on S^2 evaluable in any scalar type: either the Liouville metric
// of a solution, or the round metric times 1 + c.x.
struct SphereMetricModel {
  enum class Kind { liouville, conformal };
  Kind kind = Kind::conformal;
  Mat3 C = Mat3::Identity();
  Vec3 c = Vec3::Zero();

  template <class S> std::array<S, 3> pqr(const detail::V3<S>& x, const detail::V3<S>& v) const
  {
    if (kind == Kind::liouville) {
      auto h = detail::h_block<S>(C, x, v, xi_convention());
      return metric_from_h(h[0], h[1], h[2]);
    }
    S f = S(1.0) + S(c[0]) * x[0] + S(c[1]) * x[1] + S(c[2]) * x[2];
    return {f, f, S(0.0)};
  }

  SphereMetricSample operator()(const UnitTangent& t) const
  {
    auto m = pqr<double>({t.x[0], t.x[1], t.x[2]}, {t.v[0], t.v[1], t.v[2]});
    return {m[0], m[1], m[2]};
  }
};

inline SphereMetricModel liouville_model(const LiouvilleSolution& sol)
{
  return {SphereMetricModel::Kind::liouville, sol.C, Vec3::Zero()};
}

inline SphereMetricModel round_model() { return {}; }

inline SphereMetricModel conformal_model(const Vec3& c) { return {SphereMetricModel::Kind::conformal, Mat3::Identity(), c}; }

inline SphereMetric round_metric()
{
  return [](const UnitTangent&) { return SphereMetricSample{1.0, 1.0, 0.0}; };
}

inline SphereMetric solution_metric(const LiouvilleSolution& sol)
{
  return [sol](const UnitTangent& t) { return metric_from_solution(sol, t); };
}

// Round metric times (1 + c.x).
inline SphereMetric conformal_metric(const Vec3& c)
{
  SphereMetricModel m = conformal_model(c);
  return [m](const UnitTangent& t) { return m(t); };
}

// Closed form g(X, X) = (x cross X)^t C (x cross X) / (x^t adj(C) x)^2,
// used as an independent check of metric_from_solution.
inline double liouville_quadratic_form(const Mat3& C, const Vec3& x, const Vec3& X)
{
  Vec3 y = x.cross(X);
  Mat3 adj = C.determinant() * C.inverse();
  double d = x.dot(adj * x);
  return y.dot(C * y) / (d * d);
}

// ---------------------------------------------------------------------------
// Liouville's system.

struct LiouvilleTerms {
  double h11, h12, h22, h1, h2, h;
};

inline double liouville_residual(const SphereMetric& metric, double h, int points = 500, std::uint64_t seed = 5)
{
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  auto hij = [&](const UnitTangent& t) {
    SphereMetricSample s = metric(t);
    if (!s.positive_definite()) throw IndefiniteMetric("sphere metric is not positive definite");
    double f = std::pow(s.p * s.q - s.r * s.r, -2.0 / 3.0);
    return std::array<double, 3>{s.p * f, s.r * f, s.q * f};
  };
  auto D = [h](Flow f, const UnitTangent& t, const auto& fn) {
    return (fn(canonical_flow(t, f, h)) - fn(canonical_flow(t, f, -h))) / (2.0 * h);
  };
  auto h11 = [&](const UnitTangent& t) { return hij(t)[0]; };
  auto h12 = [&](const UnitTangent& t) { return hij(t)[1]; };
  auto h22 = [&](const UnitTangent& t) { return hij(t)[2]; };
  auto h1 = [&](const UnitTangent& t) { return -0.5 * D(Flow::transverse, t, h11); };
  auto h2 = [&](const UnitTangent& t) { return 0.5 * D(Flow::geodesic, t, h22); };
  auto h0 = [&](const UnitTangent& t) { return D(Flow::transverse, t, h1) - h11(t); };

  std::mt19937_64 rng(seed);
  std::vector<UnitTangent> sample;
  for (int n = 0; n < points; ++n) sample.push_back(random_unit_tangent(rng));
  std::vector<double> worst(sample.size(), 0.0);
  parallel_for(sample.size(), [&](std::size_t n) {
    const UnitTangent& t = sample[n];
    auto c = hij(t);
    double v1 = h1(t), v2 = h2(t), v0 = h0(t);
    const double eq[] = {
        D(Flow::geodesic, t, h11),
        D(Flow::fiber, t, h11) - 2.0 * c[1],
        D(Flow::transverse, t, h22),
        D(Flow::fiber, t, h22) + 2.0 * c[1],
        D(Flow::geodesic, t, h12) - v1,
        D(Flow::transverse, t, h12) + v2,
        D(Flow::fiber, t, h12) + (c[0] - c[2]),
        D(Flow::geodesic, t, h1) + c[1],
        D(Flow::fiber, t, h1) - v2,
        D(Flow::geodesic, t, h2) + c[2] + v0,
        D(Flow::transverse, t, h2) - c[1],
        D(Flow::fiber, t, h2) + v1,
    };
    double m = 0.0;
    for (double e : eq) m = std::max(m, std::abs(e));
    worst[n] = m;
  });
  return *std::max_element(worst.begin(), worst.end());
}

// ---------------------------------------------------------------------------
// Beltrami coefficient relative to the round conformal structure.

inline std::complex<double> beltrami(const SphereMetricSample& s)
{
  if (!s.positive_definite()) throw IndefiniteMetric("beltrami needs p > 0, q > 0, pq - r^2 > 0");
  return std::complex<double>(s.p - s.q, 2.0 * s.r) / (s.p + s.q + 2.0 * std::sqrt(s.p * s.q - s.r * s.r));
}

// ---------------------------------------------------------------------------
// Charts of S^2 and pullback of sphere metrics to chart metrics.

struct SphereChart {
  enum class Kind { gnomonic, stereographic };
  Kind kind = Kind::gnomonic;
  Mat3 rotation = Mat3::Identity();  // chart centre is rotation * e3
  Chart domain;

  // Point of S^2 and the two coordinate tangent vectors at chart point u.
  template <class S> std::array<detail::V3<S>, 3> parametrize(const S& u0, const S& u1) const
  {
    using std::sqrt;
    detail::V3<S> P, d0, d1;
    if (kind == Kind::gnomonic) {
      S rho = sqrt(S(1.0) + u0 * u0 + u1 * u1);
      S r3 = S(1.0) / (rho * rho * rho);
      P = {u0 / rho, u1 / rho, S(1.0) / rho};
      d0 = {S(1.0) / rho - u0 * u0 * r3, -u1 * u0 * r3, -u0 * r3};
      d1 = {-u0 * u1 * r3, S(1.0) / rho - u1 * u1 * r3, -u1 * r3};
    } else {
      S D = S(1.0) + u0 * u0 + u1 * u1;
      S D2 = D * D;
      detail::V3<S> N{S(2.0) * u0, S(2.0) * u1, S(1.0) - u0 * u0 - u1 * u1};
      P = {N[0] / D, N[1] / D, N[2] / D};
      d0 = {S(2.0) / D - N[0] * S(2.0) * u0 / D2, -N[1] * S(2.0) * u0 / D2, S(-2.0) * u0 / D - N[2] * S(2.0) * u0 / D2};
      d1 = {-N[0] * S(2.0) * u1 / D2, S(2.0) / D - N[1] * S(2.0) * u1 / D2, S(-2.0) * u1 / D - N[2] * S(2.0) * u1 / D2};
    }
    return {detail::mul3(rotation, P), detail::mul3(rotation, d0), detail::mul3(rotation, d1)};
  }

  Vec3 point(const Point& u) const
  {
    auto p = parametrize<double>(u[0], u[1]);
    return {p[0][0], p[0][1], p[0][2]};
  }

  // Chart velocity -> ambient velocity.
  Vec3 push_forward(const Point& u, const Vec2<double>& du) const
  {
    auto p = parametrize<double>(u[0], u[1]);
    Vec3 a(p[1][0], p[1][1], p[1][2]), b(p[2][0], p[2][1], p[2][2]);
    return du[0] * a + du[1] * b;
  }
};

template <class S> Mat2<S> chart_metric_at(const SphereMetricModel& model, const SphereChart& chart, const S& u0, const S& u1)
{
  auto P = chart.parametrize<S>(u0, u1);
  detail::V3<S> x = P[0];
  detail::V3<S> v = detail::normalize3(P[1]);
  detail::V3<S> w = detail::cross3(x, v);
  auto m = model.pqr<S>(x, v);  // p, q, r
  S a[2] = {detail::dot3(P[1], v), detail::dot3(P[2], v)};
  S b[2] = {detail::dot3(P[1], w), detail::dot3(P[2], w)};
  auto form = [&](int i, int j) { return m[0] * a[i] * a[j] + m[2] * (a[i] * b[j] + b[i] * a[j]) + m[1] * b[i] * b[j]; };
  S off = form(0, 1);
  return {{{form(0, 0), off}, {off, form(1, 1)}}};
}

inline MetricField pullback_to_chart(const SphereMetricModel& model, const SphereChart& chart, double fd_step = 1e-4)
{
  std::function<Mat2<Dual>(const Point&)> jet = [model, chart](const Point& u) {
    return chart_metric_at<Dual>(model, chart, Dual(u[0], 1.0, 0.0), Dual(u[1], 0.0, 1.0));
  };
  return jet_metric(chart.domain, jet, fd_step);
}

inline MetricField pullback_to_chart(const LiouvilleSolution& sol, const SphereChart& chart, double fd_step = 1e-4)
{
  return pullback_to_chart(liouville_model(sol), chart, fd_step);
}

// Levi-Civita connection of the pullback; values use the exact first jet
// directly rather than going through the differenced second derivatives.
inline ConnectionField pullback_connection(const SphereMetricModel& model, const SphereChart& chart)
{
  ConnectionField lc = levi_civita(pullback_to_chart(model, chart));
  auto value = [model, chart](const Point& u) {
    Mat2<Dual> g = chart_metric_at<Dual>(model, chart, Dual(u[0], 1.0, 0.0), Dual(u[1], 0.0, 1.0));
    using Ops = detail::ShapeOps<Mat2<double>>;
    return levi_civita_at<double>(Ops::value(g), {Ops::deriv(g, 0), Ops::deriv(g, 1)});
  };
  return {lc.chart, Field<Tensor21>(value, [lc](const Point& p) { return lc.symbols.jet(p); })};
}

// ---------------------------------------------------------------------------
// Great-circle test: integrate the geodesic of the metric from (x0, v0) in
// rotated gnomonic charts centred on the current point, re-charting when
// the path leaves the chart, and measure max |n . x(t)| with n normal to
// the plane of x0 and v0.

struct GreatCircleResult {
  double residual = 0.0;
  double covered = 0.0;
  int charts = 0;
  std::vector<std::pair<double, Vec3>> trace;
};

inline Mat3 chart_rotation(const Vec3& x, const Vec3& e1)
{
  Mat3 r;
  r.col(0) = e1;
  r.col(1) = x.cross(e1);
  r.col(2) = x;
  return r;
}

inline GreatCircleResult great_circle_residual(const SphereMetricModel& model, const UnitTangent& t0, double T,
                                               double step, double half_width = 0.75)
{
  if (!(step > 0.0) || !(T > 0.0)) throw std::invalid_argument("great_circle_residual needs T > 0 and step > 0");
  t0.validate();
  Vec3 n = t0.x.cross(t0.v).normalized();
  GreatCircleResult out;
  Mat3 rot = chart_rotation(t0.x, t0.v);
  Point u{0.0, 0.0};
  Vec2<double> du{1.0, 0.0};
  double t = 0.0;
  out.trace.emplace_back(0.0, t0.x);
  while (t < T) {
    SphereChart chart{SphereChart::Kind::gnomonic, rot, Chart(-half_width, half_width, -half_width, half_width, 8, 8)};
    GeodesicPath path;
    try {
      path = integrate(pullback_connection(model, chart), u, du, T - t, step);
    } catch (const GeodesicError& e) {
      throw GeodesicError(std::string("great-circle integration failed: ") + e.what(), t + e.last_valid_t());
    }
    ++out.charts;
    for (std::size_t k = 1; k < path.samples.size(); ++k) {
      Vec3 x = chart.point(path.samples[k].x);
      out.trace.emplace_back(t + path.samples[k].t, x);
      out.residual = std::max(out.residual, std::abs(n.dot(x)));
    }
    const GeodesicSample& last = path.samples.back();
    if (!path.truncated()) {
      t = T;
      break;
    }
    if (last.t <= 0.0) throw GeodesicError("geodesic cannot advance inside a fresh chart", t);
    Vec3 x = chart.point(last.x);
    Vec3 xdot = chart.push_forward(last.x, last.v);
    t += last.t;
    rot = chart_rotation(x, xdot.normalized());
    u = {0.0, 0.0};
    du = {xdot.norm(), 0.0};
  }
  out.covered = t;
  return out;
}

}  // namespace metrise
