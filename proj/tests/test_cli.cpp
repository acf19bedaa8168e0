#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cli/commands.hpp"
#include "support.hpp"

using namespace metrise;
using namespace metrise::cli;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& name) { return std::string(METRISE_CONFIG_DIR) + "/" + name; }

ProblemConfig config(const std::string& name) { return load_config(config_path(name)); }

struct Invocation {
  int code = -1;
  std::string out;
};

Invocation run(const std::string& args, const std::string& env = "")
{
  std::string cmd = env + (env.empty() ? "" : " ") + METRISE_CLI_PATH + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  Invocation r;
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string read_file(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name)
{
  fs::path d = fs::temp_directory_path() / ("metrise_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Config, ParsesSampleFiles)
{
  ProblemConfig c = config("round_gnomonic_check.json");
  EXPECT_EQ(c.chart, Chart());
  EXPECT_TRUE(c.metric_exprs.has_value());
  EXPECT_EQ(c.connection_source, ProblemConfig::ConnectionSource::levi_civita);

  ProblemConfig g = config("great_circle_check.json");
  ASSERT_TRUE(g.liouville.has_value());
  EXPECT_EQ(g.liouville->A(1, 2), 0.3);
  EXPECT_EQ(g.connection_source, ProblemConfig::ConnectionSource::flat);

  ProblemConfig geo = config("flat_geodesic.json");
  EXPECT_EQ(geo.T, 1.0);
  EXPECT_EQ(geo.options.rk4_step, 1e-3);
}

TEST(Config, RejectsBadInput)
{
  using json = nlohmann::json;
  EXPECT_THROW(parse_config(json::parse(R"({"chart": {"x": [1, 0]}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"chart": {"grid": [1, 5]}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"metrc": {}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"connection": "levi-civita"})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"connection": "curved"})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"metric": {"g11": "1"}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse(R"({"metric": {"g11": "1 +", "g22": "1"}})")), ParseError);
  EXPECT_THROW(parse_config(json::parse(R"({"metric": {"g11": "q", "g22": "1"}})")), UnknownIdentifierError);
  EXPECT_THROW(parse_config(json::parse(R"({"sphere": {"A": [1, 2]}})")), ConfigError);
  EXPECT_THROW(parse_config(json::parse("[1, 2]")), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, MatrixFlag)
{
  Mat3 a = matrix_from_string("1,2,3,4,5,6,7,8,10");
  EXPECT_EQ(a(0, 1), 2.0);
  EXPECT_EQ(a(2, 2), 10.0);
  EXPECT_EQ(a(1, 0), 4.0);
  EXPECT_THROW(matrix_from_string("1,2,3"), ConfigError);
  EXPECT_THROW(matrix_from_string("1,2,3,4,5,6,7,8,9,10"), ConfigError);
  EXPECT_THROW(matrix_from_string("1,2,3,4,x,6,7,8,9"), ConfigError);
}

TEST(Commands, CheckVerdicts)
{
  CommandResult round = cmd_check(config("round_gnomonic_check.json"), {});
  EXPECT_EQ(round.code, 0);
  EXPECT_TRUE(round.report["metrisable"].get<bool>());
  EXPECT_LT(round.report["sup_a"].get<double>(), 1e-8);
  EXPECT_EQ(round.report["grid"], nlohmann::json::array({64, 64}));

  CommandResult gc = cmd_check(config("great_circle_check.json"), {});
  EXPECT_EQ(gc.code, 0);
  EXPECT_LT(gc.report["sup_b"].get<double>(), 1e-6);

  CommandResult bad = cmd_check(config("perturbed_check.json"), {});
  EXPECT_EQ(bad.code, 1);
  EXPECT_GT(std::max(bad.report["sup_a"].get<double>(), bad.report["sup_b"].get<double>()), 1e-2);

  Overrides o;
  o.grid = std::make_pair(8, 12);
  o.tol = 1e-3;
  CommandResult small = cmd_check(config("round_gnomonic_check.json"), o);
  EXPECT_EQ(small.report["grid"], nlohmann::json::array({8, 12}));
  EXPECT_EQ(small.report["tol"].get<double>(), 1e-3);
  o.tol = -1.0;
  EXPECT_THROW(cmd_check(config("round_gnomonic_check.json"), o), ConfigError);
  EXPECT_THROW(cmd_check(config("flat_geodesic.json"), {}), ConfigError);
}

TEST(Commands, DecomposeRecoversWeylVector)
{
  CommandResult r = cmd_decompose(config("weyl_decompose.json"), {});
  EXPECT_EQ(r.code, 0);
  EXPECT_NEAR(r.report["sup_B"].get<double>(), 2.0, 1e-12);
  EXPECT_LT(r.report["sup_phi"].get<double>(), 1e-12);
  EXPECT_LT(r.report["sup_a"].get<double>(), 1e-12);
  EXPECT_GT(r.report["sup_b"].get<double>(), 0.5);
  ASSERT_EQ(r.files.size(), 10u);
  EXPECT_EQ(r.files[0].first, "a_abs.csv");
  EXPECT_EQ(r.files[2].first, "B_1.csv");
  std::istringstream b1(r.files[2].second);
  std::string line;
  std::getline(b1, line);
  EXPECT_EQ(line, "x,y,value");
  int rows = 0;
  while (std::getline(b1, line)) {
    ++rows;
    EXPECT_EQ(line.substr(line.rfind(',') + 1), "1");
  }
  EXPECT_EQ(rows, 16 * 16);

  CommandResult lc = cmd_decompose(config("round_gnomonic_check.json"), {});
  EXPECT_LT(lc.report["sup_B"].get<double>(), 1e-10);
  EXPECT_LT(lc.report["sup_phi"].get<double>(), 1e-10);
}

TEST(Commands, GeodesicStraightLine)
{
  CommandResult r = cmd_geodesic(config("flat_geodesic.json"), {});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.report["samples"].get<std::size_t>(), 1001u);
  EXPECT_EQ(r.report["termination"], "completed");
  EXPECT_NEAR(r.report["end_x"][0].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(r.report["end_x"][1].get<double>(), 0.0);
  std::istringstream csv(r.files.at(0).second);
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "t,x,y,xdot,ydot");
  while (std::getline(csv, line)) {
    double t, x, y, vx, vy;
    char c;
    std::istringstream row(line);
    row >> t >> c >> x >> c >> y >> c >> vx >> c >> vy;
    EXPECT_NEAR(x, t, 1e-12);
    EXPECT_EQ(y, 0.0);
  }
}

TEST(Commands, SphereIdentity)
{
  Overrides o;
  o.A = Mat3::Identity();
  CommandResult r = cmd_sphere(ProblemConfig{}, o);
  EXPECT_EQ(r.code, 0);
  EXPECT_LT(r.report["max_abs_mu"].get<double>(), 1e-10);
  EXPECT_EQ(r.report["epsilon"], -1);
  EXPECT_EQ(r.report["xi_convention"], "columns (x, v, x cross v)");
  ASSERT_EQ(r.files.size(), 4u);
  std::istringstream grid(r.files[0].second);
  std::string line;
  std::getline(grid, line);
  EXPECT_EQ(line, "lat,lon,p,q,r,mu_re,mu_im");
  int rows = 0;
  while (std::getline(grid, line)) {
    ++rows;
    std::istringstream row(line);
    std::array<double, 7> v{};
    char c;
    row >> v[0];
    for (std::size_t k = 1; k < 7; ++k) row >> c >> v[k];
    EXPECT_NEAR(v[2], 1.0, 1e-10);
    EXPECT_NEAR(v[3], 1.0, 1e-10);
    EXPECT_LT(std::hypot(v[5], v[6]), 1e-10);
  }
  EXPECT_EQ(rows, 19 * 36);
}

TEST(Commands, SphereGeneratedMetricPasses)
{
  CommandResult r = cmd_sphere(config("sphere.json"), {});
  EXPECT_EQ(r.code, 0);
  EXPECT_LT(r.report["liouville_residual"].get<double>(), 1e-4);
  EXPECT_LT(r.report["great_circle_max"].get<double>(), 1e-6);
  EXPECT_TRUE(r.report["structure_equations"]["pass"].get<bool>());
  EXPECT_LT(r.report["max_abs_mu"].get<double>(), 1.0);
  EXPECT_GT(r.report["max_abs_mu"].get<double>(), 1e-3);
  Overrides singular;
  singular.A = Mat3::Zero();
  EXPECT_THROW(cmd_sphere(ProblemConfig{}, singular), std::invalid_argument);
}

TEST(Commands, VerifyIdentities)
{
  CommandResult d = cmd_verify_identities(ProblemConfig{}, {});
  EXPECT_EQ(d.code, 0);
  EXPECT_EQ(d.report["trials"], 100);
  for (const auto& id : d.report["identities"]) EXPECT_TRUE(id["pass"].get<bool>()) << id.dump();
  CommandResult c = cmd_verify_identities(config("identities.json"), {});
  EXPECT_EQ(c.code, 0);
  EXPECT_EQ(c.report["identities"].size(), 7u);
}

TEST(ErrorObjects, MapExceptionTypes)
{
  auto describe = [](auto&& thrower) {
    try {
      thrower();
    } catch (...) {
      return describe_current_exception();
    }
    return nlohmann::json();
  };
  nlohmann::json p = describe([] { parse("1 +"); });
  EXPECT_EQ(p["error"]["type"], "parse_error");
  EXPECT_EQ(p["error"]["offset"], 3);
  nlohmann::json u = describe([] { parse("foo(x)"); });
  EXPECT_EQ(u["error"]["type"], "unknown_identifier");
  EXPECT_EQ(u["error"]["name"], "foo");
  nlohmann::json d = describe([] { eval(parse("log(x)"), 0, 0); });
  EXPECT_EQ(d["error"]["type"], "domain_error");
  EXPECT_EQ(d["error"]["point"], nlohmann::json::array({0.0, 0.0}));
  nlohmann::json n = describe([] { metric(Chart(), Expr(-1.0), Expr(0.0), Expr(1.0)); });
  EXPECT_EQ(n["error"]["type"], "not_positive_definite");
  nlohmann::json g = describe([] { integrate(flat_connection(Chart()), {3, 0}, {1, 0}, 1, 1e-3); });
  EXPECT_EQ(g["error"]["type"], "geodesic_error");
  nlohmann::json c = describe([] { throw ConfigError("x"); });
  EXPECT_EQ(c["error"]["type"], "config_error");
}

TEST(Binary, ExitCodes)
{
  EXPECT_EQ(run("check --config " + config_path("round_gnomonic_check.json")).code, 0);
  EXPECT_EQ(run("check --config " + config_path("great_circle_check.json")).code, 0);
  EXPECT_EQ(run("check --config " + config_path("perturbed_check.json")).code, 1);
  EXPECT_EQ(run("geodesic --config " + config_path("flat_geodesic.json")).code, 0);
  EXPECT_EQ(run("verify-identities --trials 100 --fd-step 1e-3").code, 0);
  EXPECT_EQ(run("sphere --A \"1,0,0,0,1,0,0,0,1\"").code, 0);
}

TEST(Binary, ErrorsAreMachineReadable)
{
  Invocation missing = run("check --config /nonexistent.json");
  EXPECT_EQ(missing.code, 2);
  nlohmann::json j = nlohmann::json::parse(missing.out);
  EXPECT_EQ(j["error"]["type"], "config_error");

  Invocation usage = run("check --bogus");
  EXPECT_EQ(usage.code, 2);
  EXPECT_EQ(nlohmann::json::parse(usage.out)["error"]["type"], "usage_error");

  Invocation none = run("");
  EXPECT_EQ(none.code, 2);

  Invocation grid = run("check --config " + config_path("round_gnomonic_check.json") + " --grid 8by8");
  EXPECT_EQ(grid.code, 2);
  EXPECT_EQ(nlohmann::json::parse(grid.out)["error"]["type"], "config_error");

  Invocation badA = run("sphere --A \"1,2\"");
  EXPECT_EQ(badA.code, 2);

  fs::path dir = scratch("bad_expr");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"metric": {"g11": "1 + ", "g22": "1"}, "connection": "flat"})";
  Invocation parse_fail = run("check --config " + (dir / "c.json").string());
  EXPECT_EQ(parse_fail.code, 2);
  nlohmann::json pe = nlohmann::json::parse(parse_fail.out);
  EXPECT_EQ(pe["error"]["type"], "parse_error");
  EXPECT_TRUE(pe["error"].contains("offset"));

  std::ofstream(dir / "d.json") << R"({"metric": {"g11": "x", "g22": "1"}, "connection": "flat"})";
  Invocation indefinite = run("check --config " + (dir / "d.json").string());
  EXPECT_EQ(indefinite.code, 2);
  EXPECT_EQ(nlohmann::json::parse(indefinite.out)["error"]["type"], "not_positive_definite");

  std::ofstream(dir / "e.json") << R"j({"chart": {"x": [-2, 2], "y": [-2, 2]}, "connection": {"G111": "log(1-x)"},
                                        "geodesic": {"x0": [0.5, 0], "v0": [1, 0], "T": 2}})j";
  Invocation domain = run("geodesic --config " + (dir / "e.json").string());
  EXPECT_EQ(domain.code, 2);
  EXPECT_EQ(nlohmann::json::parse(domain.out)["error"]["type"], "geodesic_error");
}

TEST(Binary, WritesOutputsAndIsDeterministic)
{
  fs::path dir = scratch("out");
  std::string args = "decompose --config " + config_path("weyl_decompose.json") + " --out " + dir.string();
  Invocation a = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_TRUE(fs::exists(dir / "phi_222.csv"));
  EXPECT_EQ(nlohmann::json::parse(read_file(dir / "report.json")), nlohmann::json::parse(a.out));
  std::string csv = read_file(dir / "a_abs.csv");
  Invocation b = run(args, "METRISE_THREADS=1");
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(read_file(dir / "a_abs.csv"), csv);

  std::string check = "check --config " + config_path("great_circle_check.json");
  EXPECT_EQ(run(check).out, run(check, "METRISE_THREADS=1").out);

  fs::path sdir = scratch("sphere");
  Invocation s = run("sphere --grid 5x8 --out " + sdir.string());
  EXPECT_EQ(s.code, 0);
  EXPECT_TRUE(fs::exists(sdir / "metric_grid.csv"));
  EXPECT_TRUE(fs::exists(sdir / "geodesic_2.csv"));
}
