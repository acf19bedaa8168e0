#pragma once

// Problem configuration read from JSON.
//
// {
//   "chart":      {"x": [x0, x1], "y": [y0, y1], "grid": [nx, ny]},
//   "metric":     {"g11": "...", "g12": "...", "g22": "..."}
//              or {"liouville": {"A": [a11, ..., a33], "projection": "gnomonic" | "stereographic"}},
//   "connection": {"G111": "...", "G112": "...", ...} | "levi-civita" | "flat",
//   "xi":         ["xi1", "xi2"],
//   "geodesic":   {"x0": [x, y], "v0": [vx, vy], "T": 1.0},
//   "options":    {"tol": 1e-6, "fd_step": 1e-3, "rk4_step": 1e-3, "trials": 100}
// }

#include <array>
#include <cctype>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "metrise/metrise.hpp"

namespace metrise::cli {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  double tol = default_tol;
  double fd_step = 1e-3;
  double rk4_step = 1e-3;
  int trials = 100;
};

struct LiouvilleSpec {
  Mat3 A = Mat3::Identity();
  SphereChart::Kind projection = SphereChart::Kind::gnomonic;
};

struct ProblemConfig {
  Chart chart;
  std::optional<std::array<Expr, 3>> metric_exprs;
  std::optional<LiouvilleSpec> liouville;
  enum class ConnectionSource { none, expressions, levi_civita, flat };
  ConnectionSource connection_source = ConnectionSource::none;
  std::array<Expr, 6> connection_exprs;
  std::optional<std::array<Expr, 2>> xi;
  Point x0{0.0, 0.0};
  Vec2<double> v0{1.0, 0.0};
  double T = 1.0;
  Options options;
  std::optional<Mat3> sphere_A;

  bool has_metric() const { return metric_exprs.has_value() || liouville.has_value(); }
  bool has_connection() const { return connection_source != ConnectionSource::none; }

  MetricField build_metric() const
  {
    if (metric_exprs) return metric(chart, (*metric_exprs)[0], (*metric_exprs)[1], (*metric_exprs)[2]);
    if (liouville) {
      SphereChart sc{liouville->projection, Mat3::Identity(), chart};
      return pullback_to_chart(liouville_solution(liouville->A), sc);
    }
    throw ConfigError("config has no metric");
  }

  ConnectionField build_connection() const
  {
    switch (connection_source) {
      case ConnectionSource::expressions:
        return connection(chart, connection_exprs);
      case ConnectionSource::levi_civita:
        return levi_civita(build_metric());
      case ConnectionSource::flat:
        return flat_connection(chart);
      case ConnectionSource::none:
        break;
    }
    throw ConfigError("config has no connection");
  }
};

inline const char* connection_keys[6] = {"G111", "G112", "G122", "G211", "G212", "G222"};

namespace detail {

inline Expr expression(const json& j, const std::string& where)
{
  if (j.is_number()) return Expr(j.get<double>());
  if (!j.is_string()) throw ConfigError(where + " must be a string expression or a number");
  return parse(j.get<std::string>());
}

inline double number(const json& j, const std::string& where)
{
  if (!j.is_number()) throw ConfigError(where + " must be a number");
  return j.get<double>();
}

inline std::array<double, 2> pair(const json& j, const std::string& where)
{
  if (!j.is_array() || j.size() != 2) throw ConfigError(where + " must be an array of two numbers");
  return {number(j[0], where), number(j[1], where)};
}

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline Mat3 matrix_from_numbers(const std::array<double, 9>& a)
{
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = a[static_cast<std::size_t>(3 * i + j)];
  return m;
}

inline Mat3 matrix_from_json(const json& j, const std::string& where)
{
  if (!j.is_array() || j.size() != 9) throw ConfigError(where + " must hold nine numbers (row-major)");
  std::array<double, 9> a{};
  for (std::size_t k = 0; k < 9; ++k) a[k] = detail::number(j[k], where);
  return matrix_from_numbers(a);
}

// "a11,a12,...,a33"
inline Mat3 matrix_from_string(const std::string& s)
{
  std::array<double, 9> a{};
  std::stringstream ss(s);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k == 9) throw ConfigError("--A takes exactly nine comma-separated numbers");
    try {
      std::size_t used = 0;
      a[k] = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("--A entry '" + item + "' is not a number");
    }
    ++k;
  }
  if (k != 9) throw ConfigError("--A takes exactly nine comma-separated numbers");
  return matrix_from_numbers(a);
}

inline ProblemConfig parse_config(const json& j)
{
  using detail::check_keys;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  check_keys(j, {"chart", "metric", "connection", "xi", "geodesic", "options", "sphere"}, "config");
  ProblemConfig c;

  if (j.contains("chart")) {
    const json& ch = j["chart"];
    check_keys(ch, {"x", "y", "grid"}, "chart");
    auto x = ch.contains("x") ? detail::pair(ch["x"], "chart.x") : std::array<double, 2>{-1.0, 1.0};
    auto y = ch.contains("y") ? detail::pair(ch["y"], "chart.y") : std::array<double, 2>{-1.0, 1.0};
    auto g = ch.contains("grid") ? detail::pair(ch["grid"], "chart.grid") : std::array<double, 2>{64, 64};
    try {
      c.chart = Chart(x[0], x[1], y[0], y[1], static_cast<int>(g[0]), static_cast<int>(g[1]));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  if (j.contains("metric")) {
    const json& m = j["metric"];
    if (!m.is_object()) throw ConfigError("metric must be an object");
    if (m.contains("liouville")) {
      check_keys(m, {"liouville"}, "metric");
      const json& l = m["liouville"];
      check_keys(l, {"A", "projection"}, "metric.liouville");
      LiouvilleSpec spec;
      if (l.contains("A")) spec.A = matrix_from_json(l["A"], "metric.liouville.A");
      if (l.contains("projection")) {
        std::string p = l["projection"].is_string() ? l["projection"].get<std::string>() : "";
        if (p == "gnomonic")
          spec.projection = SphereChart::Kind::gnomonic;
        else if (p == "stereographic")
          spec.projection = SphereChart::Kind::stereographic;
        else
          throw ConfigError("metric.liouville.projection must be \"gnomonic\" or \"stereographic\"");
      }
      c.liouville = spec;
    } else {
      check_keys(m, {"g11", "g12", "g22"}, "metric");
      for (const char* k : {"g11", "g22"})
        if (!m.contains(k)) throw ConfigError(std::string("metric.") + k + " is required");
      c.metric_exprs = std::array<Expr, 3>{detail::expression(m["g11"], "metric.g11"),
                                           m.contains("g12") ? detail::expression(m["g12"], "metric.g12") : Expr(0.0),
                                           detail::expression(m["g22"], "metric.g22")};
    }
  }

  if (j.contains("connection")) {
    const json& g = j["connection"];
    if (g.is_string()) {
      std::string s = g.get<std::string>();
      if (s == "levi-civita")
        c.connection_source = ProblemConfig::ConnectionSource::levi_civita;
      else if (s == "flat")
        c.connection_source = ProblemConfig::ConnectionSource::flat;
      else
        throw ConfigError("connection must be an object of Gijk expressions, \"levi-civita\" or \"flat\"");
      if (c.connection_source == ProblemConfig::ConnectionSource::levi_civita && !c.has_metric())
        throw ConfigError("connection \"levi-civita\" needs a metric");
    } else if (g.is_object()) {
      check_keys(g, {"G111", "G112", "G122", "G211", "G212", "G222"}, "connection");
      for (std::size_t k = 0; k < 6; ++k) {
        const char* key = connection_keys[k];
        c.connection_exprs[k] = g.contains(key) ? detail::expression(g[key], std::string("connection.") + key) : Expr(0.0);
      }
      c.connection_source = ProblemConfig::ConnectionSource::expressions;
    } else {
      throw ConfigError("connection must be an object or a string");
    }
  }

  if (j.contains("xi")) {
    const json& x = j["xi"];
    if (!x.is_array() || x.size() != 2) throw ConfigError("xi must be an array of two expressions");
    c.xi = std::array<Expr, 2>{detail::expression(x[0], "xi[0]"), detail::expression(x[1], "xi[1]")};
  }

  if (j.contains("geodesic")) {
    const json& g = j["geodesic"];
    check_keys(g, {"x0", "v0", "T"}, "geodesic");
    if (g.contains("x0")) c.x0 = detail::pair(g["x0"], "geodesic.x0");
    if (g.contains("v0")) c.v0 = detail::pair(g["v0"], "geodesic.v0");
    if (g.contains("T")) c.T = detail::number(g["T"], "geodesic.T");
  }

  if (j.contains("sphere")) {
    const json& s = j["sphere"];
    check_keys(s, {"A"}, "sphere");
    if (s.contains("A")) c.sphere_A = matrix_from_json(s["A"], "sphere.A");
  }

  if (j.contains("options")) {
    const json& o = j["options"];
    check_keys(o, {"tol", "fd_step", "rk4_step", "trials"}, "options");
    if (o.contains("tol")) c.options.tol = detail::number(o["tol"], "options.tol");
    if (o.contains("fd_step")) c.options.fd_step = detail::number(o["fd_step"], "options.fd_step");
    if (o.contains("rk4_step")) c.options.rk4_step = detail::number(o["rk4_step"], "options.rk4_step");
    if (o.contains("trials")) c.options.trials = static_cast<int>(detail::number(o["trials"], "options.trials"));
  }
  return c;
}

inline ProblemConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace metrise::cli
