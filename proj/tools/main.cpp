#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "cli/commands.hpp"

namespace fs = std::filesystem;
using namespace metrise;
using namespace metrise::cli;

namespace {

struct Flags {
  std::string config, out, grid, A;
  double tol = 0.0, fd_step = 0.0, rk4_step = 0.0;
  int trials = 0;
};

void add_flags(CLI::App* sub, Flags& f)
{
  sub->add_option("--config", f.config, "problem configuration (JSON)");
  sub->add_option("--tol", f.tol, "residual tolerance");
  sub->add_option("--fd-step", f.fd_step, "finite-difference step");
  sub->add_option("--rk4-step", f.rk4_step, "RK4 step");
  sub->add_option("--grid", f.grid, "sampling grid NxM");
  sub->add_option("--out", f.out, "output directory for reports and CSV files");
  sub->add_option("--A", f.A, "sphere matrix A as \"a11,a12,...,a33\"");
  sub->add_option("--trials", f.trials, "random samples per identity");
}

Overrides overrides_from(const CLI::App* sub, const Flags& f)
{
  Overrides o;
  if (sub->count("--tol")) o.tol = f.tol;
  if (sub->count("--fd-step")) o.fd_step = f.fd_step;
  if (sub->count("--rk4-step")) o.rk4_step = f.rk4_step;
  if (sub->count("--trials")) o.trials = f.trials;
  if (sub->count("--grid")) {
    std::smatch m;
    static const std::regex re(R"((\d+)[xX](\d+))");
    if (!std::regex_match(f.grid, m, re)) throw ConfigError("--grid must look like NxM");
    o.grid = std::make_pair(std::stoi(m[1]), std::stoi(m[2]));
  }
  if (sub->count("--A")) o.A = matrix_from_string(f.A);
  return o;
}

void write_outputs(const std::string& dir, const CommandResult& r)
{
  fs::create_directories(dir);
  for (const auto& [name, contents] : r.files) {
    std::ofstream f(fs::path(dir) / name);
    if (!f) throw ConfigError("cannot write " + (fs::path(dir) / name).string());
    f << contents;
  }
  std::ofstream rep(fs::path(dir) / "report.json");
  if (!rep) throw ConfigError("cannot write report.json in " + dir);
  rep << r.report.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"metrise: metrisability of 2D projective structures and great-circle metrics on S^2"};
  app.require_subcommand(1);
  Flags flags;
  CLI::App* check = app.add_subcommand("check", "decide whether the connection's projective class is metrised by the metric");
  CLI::App* decompose = app.add_subcommand("decompose", "Weyl decomposition and residual fields a, b on the grid");
  CLI::App* sphere = app.add_subcommand("sphere", "great-circle metric generated by A");
  CLI::App* geodesic = app.add_subcommand("geodesic", "integrate a geodesic of a chart connection");
  CLI::App* verify = app.add_subcommand("verify-identities", "frame-bundle identities and structure equations");
  for (CLI::App* s : {check, decompose, sphere, geodesic, verify}) add_flags(s, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cout << error_object("usage_error", e.what()).dump(2) << '\n';
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  CommandResult result;
  try {
    ProblemConfig config;
    if (!flags.config.empty()) config = load_config(flags.config);
    Overrides o = overrides_from(sub, flags);
    if (sub == check)
      result = cmd_check(config, o);
    else if (sub == decompose)
      result = cmd_decompose(config, o);
    else if (sub == sphere)
      result = cmd_sphere(config, o);
    else if (sub == geodesic)
      result = cmd_geodesic(config, o);
    else
      result = cmd_verify_identities(config, o);
    if (!flags.out.empty()) write_outputs(flags.out, result);
  } catch (...) {
    std::cout << describe_current_exception().dump(2) << '\n';
    return 2;
  }
  std::cout << result.report.dump(2) << '\n';
  return result.code;
}
