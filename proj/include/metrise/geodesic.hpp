#pragma once

// Fixed-step RK4 integration of  x''^i + Gamma^i_{jk} x'^j x'^k = 0  on a
// chart, and a parametrization-blind distance between geodesic traces.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "metrise/field.hpp"
#include "metrise/tensor.hpp"

namespace metrise {

struct GeodesicSample {
  double t;
  Point x;
  Vec2<double> v;
};

enum class Termination { completed, left_chart };

struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  double step = 0.0;
  std::string method = "rk4";
  Termination termination = Termination::completed;

  bool truncated() const { return termination != Termination::completed; }
  double end_time() const { return samples.empty() ? 0.0 : samples.back().t; }
};

class GeodesicError : public std::runtime_error {
 public:
  GeodesicError(const std::string& what, double last_valid_t)
      : std::runtime_error(what + " (last valid t = " + std::to_string(last_valid_t) + ")"), last_valid_t_(last_valid_t)
  {
  }
  double last_valid_t() const { return last_valid_t_; }

 private:
  double last_valid_t_;
};

namespace detail {

struct GeodesicState {
  Point x;
  Vec2<double> v;
};

inline GeodesicState geodesic_rhs(const ConnectionField& gamma, const GeodesicState& s)
{
  Tensor21<double> g = gamma(s.x);
  GeodesicState d{{s.v[0], s.v[1]}, {0.0, 0.0}};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) d.v[i] -= g[i][j][k] * s.v[j] * s.v[k];
  return d;
}

inline GeodesicState axpy(const GeodesicState& s, double h, const GeodesicState& d)
{
  return {{s.x[0] + h * d.x[0], s.x[1] + h * d.x[1]}, {s.v[0] + h * d.v[0], s.v[1] + h * d.v[1]}};
}

inline GeodesicState rk4_step(const ConnectionField& gamma, const GeodesicState& s, double h)
{
  GeodesicState k1 = geodesic_rhs(gamma, s);
  GeodesicState k2 = geodesic_rhs(gamma, axpy(s, 0.5 * h, k1));
  GeodesicState k3 = geodesic_rhs(gamma, axpy(s, 0.5 * h, k2));
  GeodesicState k4 = geodesic_rhs(gamma, axpy(s, h, k3));
  GeodesicState out = s;
  for (int i = 0; i < 2; ++i) {
    out.x[i] += h / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
    out.v[i] += h / 6.0 * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
  }
  return out;
}

}  // namespace detail

inline GeodesicPath integrate(const ConnectionField& gamma, const Point& x0, const Vec2<double>& v0, double T,
                              double step)
{
  if (!(step > 0.0)) throw std::invalid_argument("integration step must be positive");
  if (!(T >= 0.0)) throw std::invalid_argument("integration time must be non-negative");
  if (!gamma.chart.contains(x0)) throw GeodesicError("initial point lies outside the chart", 0.0);

  GeodesicPath path;
  path.step = step;
  path.samples.push_back({0.0, x0, v0});
  detail::GeodesicState s{x0, v0};
  auto steps = static_cast<long>(std::ceil(T / step - 1e-9));
  for (long n = 1; n <= steps; ++n) {
    double t_prev = path.samples.back().t;
    double t_next = std::min(T, n * step);
    detail::GeodesicState next;
    try {
      next = detail::rk4_step(gamma, s, t_next - t_prev);
    } catch (const std::exception& e) {
      throw GeodesicError(std::string("connection evaluation failed: ") + e.what(), t_prev);
    }
    if (!std::isfinite(next.x[0]) || !std::isfinite(next.x[1]) || !std::isfinite(next.v[0]) ||
        !std::isfinite(next.v[1]))
      throw GeodesicError("non-finite state", t_prev);
    if (!gamma.chart.contains(next.x)) {
      path.termination = Termination::left_chart;
      break;
    }
    s = next;
    path.samples.push_back({t_next, s.x, s.v});
  }
  return path;
}

inline double arc_length(const GeodesicPath& p)
{
  double len = 0.0;
  for (std::size_t i = 1; i < p.samples.size(); ++i)
    len += std::hypot(p.samples[i].x[0] - p.samples[i - 1].x[0], p.samples[i].x[1] - p.samples[i - 1].x[1]);
  return len;
}

namespace detail {

// Points at equal chart arc-length spacing along the polyline, up to `length`.
inline std::vector<Point> resample_by_arc_length(const GeodesicPath& p, double length, std::size_t count)
{
  std::vector<Point> out;
  out.reserve(count);
  const auto& s = p.samples;
  if (s.size() == 1 || length <= 0.0) {
    out.assign(count, s.front().x);
    return out;
  }
  std::size_t seg = 1;
  double seg_start = 0.0;
  for (std::size_t n = 0; n < count; ++n) {
    double target = length * static_cast<double>(n) / static_cast<double>(count - 1);
    for (;;) {
      double seg_len = std::hypot(s[seg].x[0] - s[seg - 1].x[0], s[seg].x[1] - s[seg - 1].x[1]);
      if (target <= seg_start + seg_len || seg + 1 == s.size()) {
        double f = seg_len > 0.0 ? std::clamp((target - seg_start) / seg_len, 0.0, 1.0) : 0.0;
        out.push_back({s[seg - 1].x[0] + f * (s[seg].x[0] - s[seg - 1].x[0]),
                       s[seg - 1].x[1] + f * (s[seg].x[1] - s[seg - 1].x[1])});
        break;
      }
      seg_start += seg_len;
      ++seg;
    }
  }
  return out;
}

inline double point_segment_distance(const Point& p, const Point& a, const Point& b)
{
  double dx = b[0] - a[0], dy = b[1] - a[1];
  double len2 = dx * dx + dy * dy;
  double f = len2 > 0.0 ? std::clamp(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2, 0.0, 1.0) : 0.0;
  return std::hypot(p[0] - a[0] - f * dx, p[1] - a[1] - f * dy);
}

inline double directed_hausdorff(const std::vector<Point>& from, const std::vector<Point>& to)
{
  double worst = 0.0;
  for (const Point& p : from) {
    double best = std::numeric_limits<double>::infinity();
    if (to.size() == 1) best = std::hypot(p[0] - to[0][0], p[1] - to[0][1]);
    for (std::size_t i = 1; i < to.size(); ++i) best = std::min(best, point_segment_distance(p, to[i - 1], to[i]));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

// Symmetric Hausdorff distance between the two traces, each cut to the
// common arc length and resampled uniformly in chart arc length. Both
// traces are taken from their first sample, so paths through the same
// initial point in the same direction compare like-for-like.
inline double unparametrized_distance(const GeodesicPath& p, const GeodesicPath& q, std::size_t resolution = 2000)
{
  if (p.samples.empty() || q.samples.empty()) throw std::invalid_argument("geodesic paths must be nonempty");
  double length = std::min(arc_length(p), arc_length(q));
  auto a = detail::resample_by_arc_length(p, length, resolution);
  auto b = detail::resample_by_arc_length(q, length, resolution);
  return std::max(detail::directed_hausdorff(a, b), detail::directed_hausdorff(b, a));
}

}  // namespace metrise
