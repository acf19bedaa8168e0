#pragma once

// Subcommands of the metrise tool. Each returns an exit code, a JSON
// report and any CSV files to write; main() does the I/O.

#include <charconv>
#include <cmath>
#include <complex>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cli/config.hpp"
#include "metrise/metrise.hpp"

namespace metrise::cli {

struct Overrides {
  std::optional<double> tol, fd_step, rk4_step;
  std::optional<std::pair<int, int>> grid;
  std::optional<Mat3> A;
  std::optional<int> trials;
};

struct CommandResult {
  int code = 0;
  json report;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents
};

inline void apply(ProblemConfig& c, const Overrides& o)
{
  if (o.tol) c.options.tol = *o.tol;
  if (o.fd_step) c.options.fd_step = *o.fd_step;
  if (o.rk4_step) c.options.rk4_step = *o.rk4_step;
  if (o.trials) c.options.trials = *o.trials;
  if (o.grid) {
    try {
      c.chart = c.chart.with_grid(o.grid->first, o.grid->second);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  if (!(c.options.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(c.options.fd_step > 0.0)) throw ConfigError("fd_step must be positive");
  if (!(c.options.rk4_step > 0.0)) throw ConfigError("rk4_step must be positive");
  if (c.options.trials < 1) throw ConfigError("trials must be at least 1");
}

// Shortest round-trip decimal form.
inline std::string num(double v)
{
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string csv_row(std::initializer_list<double> values)
{
  std::string s;
  bool first = true;
  for (double v : values) {
    if (!first) s += ',';
    s += num(v);
    first = false;
  }
  s += '\n';
  return s;
}

inline json grid_json(const Chart& c) { return json::array({c.nx, c.ny}); }

inline json matrix_json(const Mat3& m)
{
  json a = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a.push_back(m(i, j));
  return a;
}

inline json error_object(const std::string& type, const std::string& message)
{
  return {{"error", {{"type", type}, {"message", message}}}};
}

// Maps an in-flight exception to the machine-readable error object.
inline json describe_current_exception()
{
  try {
    throw;
  } catch (const ParseError& e) {
    json j = error_object("parse_error", e.what());
    j["error"]["offset"] = e.offset();
    j["error"]["expected"] = e.expected();
    return j;
  } catch (const UnknownIdentifierError& e) {
    json j = error_object("unknown_identifier", e.what());
    j["error"]["offset"] = e.offset();
    j["error"]["name"] = e.name();
    return j;
  } catch (const DomainError& e) {
    json j = error_object("domain_error", e.what());
    j["error"]["subexpression"] = e.subexpression();
    j["error"]["point"] = json::array({e.x(), e.y()});
    return j;
  } catch (const NotPositiveDefinite& e) {
    json j = error_object("not_positive_definite", e.what());
    j["error"]["point"] = json::array({e.point()[0], e.point()[1]});
    return j;
  } catch (const GeodesicError& e) {
    json j = error_object("geodesic_error", e.what());
    j["error"]["last_valid_t"] = e.last_valid_t();
    return j;
  } catch (const ChartMismatch& e) {
    return error_object("chart_mismatch", e.what());
  } catch (const IndefiniteMetric& e) {
    return error_object("indefinite_metric", e.what());
  } catch (const ConfigError& e) {
    return error_object("config_error", e.what());
  } catch (const std::exception& e) {
    return error_object("error", e.what());
  } catch (...) {
    return error_object("error", "unknown failure");
  }
}

// ---------------------------------------------------------------------------

inline CommandResult cmd_check(ProblemConfig c, const Overrides& o)
{
  apply(c, o);
  if (!c.has_connection()) throw ConfigError("check needs a connection");
  if (!c.has_metric()) throw ConfigError("check needs a metric");
  ProjectiveStructure p{c.build_connection()};
  MetrisabilityReport r = check_metrisable_by(p, c.build_metric(), c.options.tol);
  CommandResult out;
  out.code = r.verdict ? 0 : 1;
  out.report = {{"command", "check"},
                {"metrisable", r.verdict},
                {"sup_a", r.sup_a},
                {"sup_b", r.sup_b},
                {"weyl_only", r.weyl_only_verdict},
                {"grid", grid_json(c.chart)},
                {"tol", r.tol}};
  return out;
}

inline CommandResult cmd_decompose(ProblemConfig c, const Overrides& o)
{
  apply(c, o);
  if (!c.has_connection()) throw ConfigError("decompose needs a connection");
  if (!c.has_metric()) throw ConfigError("decompose needs a metric");
  ProjectiveStructure p{c.build_connection()};
  MetricField m = c.build_metric();
  WeylDecomposition w = weyl_decompose(p, m);

  static const char* phi_names[6] = {"phi_111", "phi_112", "phi_122", "phi_211", "phi_212", "phi_222"};
  static const int phi_index[6][3] = {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 0, 0}, {1, 0, 1}, {1, 1, 1}};
  std::vector<std::string> names = {"a_abs", "b_abs", "B_1", "B_2"};
  for (const char* n : phi_names) names.emplace_back(n);
  std::vector<std::string> csv(names.size(), "x,y,value\n");
  double sup_a = 0.0, sup_b = 0.0, sup_B = 0.0, sup_phi = 0.0;
  for (int i = 0; i < c.chart.nx; ++i)
    for (int j = 0; j < c.chart.ny; ++j) {
      Point x = c.chart.grid_point(i, j);
      ResidualPoint r = residuals_at(p.representative, m, x);
      WeylPoint<double> wp = weyl_point<double>(p.representative, m, x);
      std::vector<double> values = {std::abs(r.a), std::abs(r.b), wp.B[0], wp.B[1]};
      for (const auto& ix : phi_index) values.push_back(wp.phi[ix[0]][ix[1]][ix[2]]);
      for (std::size_t k = 0; k < values.size(); ++k) csv[k] += csv_row({x[0], x[1], values[k]});
      sup_a = std::max(sup_a, std::abs(r.a));
      sup_b = std::max(sup_b, std::abs(r.b));
      sup_B = std::max(sup_B, max_abs(wp.B));
      sup_phi = std::max(sup_phi, max_abs(wp.phi));
    }
  CommandResult out;
  out.report = {{"command", "decompose"},
                {"sup_a", sup_a},
                {"sup_b", sup_b},
                {"sup_B", sup_B},
                {"sup_phi", sup_phi},
                {"normalized_representative_residual", normalized_representative_check(p, m)},
                {"grid", grid_json(c.chart)}};
  for (std::size_t k = 0; k < names.size(); ++k) out.files.emplace_back(names[k] + ".csv", csv[k]);
  return out;
}

inline CommandResult cmd_geodesic(ProblemConfig c, const Overrides& o)
{
  apply(c, o);
  ConnectionField gamma;
  if (c.has_connection())
    gamma = c.build_connection();
  else if (c.has_metric())
    gamma = levi_civita(c.build_metric());
  else
    throw ConfigError("geodesic needs a connection or a metric");
  GeodesicPath path = integrate(gamma, c.x0, c.v0, c.T, c.options.rk4_step);
  std::string csv = "t,x,y,xdot,ydot\n";
  for (const auto& s : path.samples) csv += csv_row({s.t, s.x[0], s.x[1], s.v[0], s.v[1]});
  const GeodesicSample& last = path.samples.back();
  CommandResult out;
  out.report = {{"command", "geodesic"},
                {"method", path.method},
                {"step", path.step},
                {"samples", path.samples.size()},
                {"termination", path.truncated() ? "left_chart" : "completed"},
                {"end_t", last.t},
                {"end_x", json::array({last.x[0], last.x[1]})},
                {"end_v", json::array({last.v[0], last.v[1]})}};
  out.files.emplace_back("geodesic.csv", csv);
  return out;
}

// Halving sequence h, h/2, h/4, h/8 of the structure-equation residual.
inline json structure_order_check(double h, bool& pass)
{
  json steps = json::array(), residuals = json::array(), ratios = json::array();
  double prev = 0.0;
  pass = true;
  for (int k = 0; k < 4; ++k) {
    double step = h / std::pow(2.0, k);
    double r = structure_equation_residual(step);
    steps.push_back(step);
    residuals.push_back(r);
    if (k > 0) {
      double ratio = prev / r;
      ratios.push_back(ratio);
      pass = pass && ratio >= 3.5 && ratio <= 4.5;
    }
    prev = r;
  }
  return {{"steps", steps}, {"residuals", residuals}, {"ratios", ratios}, {"band", json::array({3.5, 4.5})}, {"pass", pass}};
}

inline CommandResult cmd_sphere(ProblemConfig c, const Overrides& o)
{
  apply(c, o);
  Mat3 A = o.A ? *o.A : (c.sphere_A ? *c.sphere_A : Mat3::Identity());
  LiouvilleSolution sol = liouville_solution(A);
  SphereMetricModel model = liouville_model(sol);
  int nlat = o.grid ? o.grid->first : 19, nlon = o.grid ? o.grid->second : 36;
  if (nlat < 1 || nlon < 1) throw ConfigError("sphere grid must be at least 1x1");

  std::string grid_csv = "lat,lon,p,q,r,mu_re,mu_im\n";
  double max_mu = 0.0;
  int eps_min = 1, eps_max = -1;
  for (int i = 0; i < nlat; ++i)
    for (int j = 0; j < nlon; ++j) {
      double lat = -90.0 + 180.0 * (i + 0.5) / nlat, lon = 360.0 * j / nlon;
      double la = lat * std::numbers::pi / 180.0, lo = lon * std::numbers::pi / 180.0;
      UnitTangent t{{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)},
                    {-std::sin(lo), std::cos(lo), 0.0}};
      SphereMetricSample s = metric_from_solution(sol, t);
      std::complex<double> mu = beltrami(s);
      int eps = metric_sign(sol, t);
      eps_min = std::min(eps_min, eps);
      eps_max = std::max(eps_max, eps);
      max_mu = std::max(max_mu, std::abs(mu));
      grid_csv += csv_row({lat, lon, s.p, s.q, s.r, mu.real(), mu.imag()});
    }

  double liouville = liouville_residual(solution_metric(sol), c.options.fd_step);
  std::mt19937_64 rng(17);
  json gc = json::array();
  double gc_max = 0.0;
  CommandResult out;
  for (int k = 0; k < 3; ++k) {
    UnitTangent t0 = random_unit_tangent(rng);
    GreatCircleResult g = great_circle_residual(model, t0, 2.0 * std::numbers::pi, c.options.rk4_step);
    gc_max = std::max(gc_max, g.residual);
    gc.push_back({{"x0", json::array({t0.x[0], t0.x[1], t0.x[2]})},
                  {"v0", json::array({t0.v[0], t0.v[1], t0.v[2]})},
                  {"residual", g.residual},
                  {"charts", g.charts}});
    std::string trace = "t,x,y,z\n";
    for (const auto& [t, x] : g.trace) trace += csv_row({t, x[0], x[1], x[2]});
    out.files.emplace_back("geodesic_" + std::to_string(k) + ".csv", trace);
  }
  out.files.insert(out.files.begin(), {"metric_grid.csv", grid_csv});

  bool order_pass = false;
  json order = structure_order_check(c.options.fd_step, order_pass);
  bool pass = liouville < 1e-4 && gc_max < 1e-6 && order_pass && max_mu < 1.0;
  out.code = pass ? 0 : 1;
  out.report = {{"command", "sphere"},
                {"A", matrix_json(A)},
                {"det_A", A.determinant()},
                {"xi_convention", xi_convention().name()},
                {"epsilon", eps_min == eps_max ? json(eps_min) : json("mixed")},
                {"liouville_residual", liouville},
                {"fd_step", c.options.fd_step},
                {"great_circle", gc},
                {"great_circle_max", gc_max},
                {"rk4_step", c.options.rk4_step},
                {"structure_equations", order},
                {"max_abs_mu", max_mu},
                {"grid", json::array({nlat, nlon})},
                {"pass", pass}};
  return out;
}

inline CommandResult cmd_verify_identities(ProblemConfig c, const Overrides& o)
{
  apply(c, o);
  ConnectionField gamma;
  std::optional<MetricField> m;
  if (c.has_connection()) {
    gamma = c.build_connection();
    if (c.has_metric()) m = c.build_metric();
  } else {
    // Round sphere in stereographic coordinates.
    Expr x = parse("x"), y = parse("y");
    Expr f = 4.0 / pow(1.0 + x * x + y * y, Expr(2.0));
    m = metric(c.chart, f, Expr(0.0), f);
    gamma = levi_civita(*m);
  }
  OneForm xi = c.xi ? one_form((*c.xi)[0], (*c.xi)[1]) : one_form(parse("x*y + 0.5"), parse("sin(x) - y^2"));

  json ids = json::array();
  bool all = true;
  auto add = [&](const std::string& name, double residual, double tol) {
    bool ok = residual < tol;
    all = all && ok;
    ids.push_back({{"name", name}, {"residual", residual}, {"tolerance", tol}, {"pass", ok}});
  };
  EquivarianceResidual eq = equivariance_sweep(gamma, c.options.trials);
  add("omega_equivariance", eq.omega, 1e-12);
  add("theta_equivariance", eq.theta, 1e-12);
  add("omega_complex_equivariance", eq.omega_complex, 1e-12);
  add("zeta_equivariance", eq.zeta, 1e-12);
  add("projective_change", projective_change_check(gamma, xi, c.options.trials), 1e-10);
  if (m) {
    ConnectionField other = gamma + sym(xi);
    double worst = grid_sup(c.chart, [&](const Point& p) {
      ResidualPoint r1 = residuals_at(gamma, *m, p), r2 = residuals_at(other, *m, p);
      return std::max(std::abs(r1.a - r2.a), std::abs(r1.b - r2.b));
    });
    add("representative_independence", worst, 1e-8);
  }
  double h = c.options.fd_step;
  double se = structure_equation_residual(h);
  add("structure_equations", se, 10.0 * h * h);
  bool order_pass = false;
  json order = structure_order_check(h, order_pass);
  all = all && order_pass;

  CommandResult out;
  out.code = all ? 0 : 1;
  out.report = {{"command", "verify-identities"},
                {"trials", c.options.trials},
                {"fd_step", h},
                {"identities", ids},
                {"structure_order", order},
                {"pass", all}};
  return out;
}

}  // namespace metrise::cli
