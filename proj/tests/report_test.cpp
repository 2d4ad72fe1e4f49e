#include "euler_rates/report.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "gtest/gtest.h"

namespace euler_rates {
namespace {

std::string temp_path(const std::string& name) { return testing::TempDir() + "euler_rates_" + name; }

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = temp_path(name);
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

SuiteResult one_row() {
  SuiteResult r{Suite::rates};
  r.table.columns = {"n", "t", "alpha", "error", "envelope", "ratio"};
  r.table.rows.push_back({16LL, 1.0, 0.5, 0.1, 0.3, 1.0 / 3.0});
  r.series.push_back({"alpha=0.5", "points", {{1.0, -1.0}}});
  r.series.push_back({"alpha=0.5", "envelope", {{1.0, -0.5}, {2.0, -0.75}}});
  return r;
}

TEST(LoadConfig, MinimalRatesUsesDefaults) {
  const auto path = write_temp("minimal.json", R"({"suite": "rates", "alpha_list": [1]})");
  const SweepConfig c = load_config(path);
  EXPECT_EQ(c.suite, Suite::rates);
  EXPECT_EQ(c.alpha_list, std::vector<double>{1.0});
  EXPECT_EQ(c.n_grid.front(), 16);
  EXPECT_EQ(c.n_grid.back(), 4096);
  EXPECT_EQ(c.quadrature.rel_tol, QuadratureSpec{}.rel_tol);
  EXPECT_EQ(c.quadrature.max_panels, QuadratureSpec{}.max_panels);
  EXPECT_FALSE(c.generator.has_value());
}

TEST(LoadConfig, RejectsNonPositiveN) {
  const auto path = write_temp("n0.json", R"({"suite": "rates", "n_grid": [0]})");
  try {
    load_config(path);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "n_grid[0]");
    EXPECT_NE(std::string(e.what()).find("n must be ≥ 1"), std::string::npos);
  }
}

TEST(LoadConfig, InfInDensityPiece) {
  const auto path = write_temp("inf.json", R"({"suite": "norms",
      "function": {"alpha": 2, "pieces": [[1, "inf", 1, 0.5]]}})");
  const SweepConfig c = load_config(path);
  const auto& f = std::get<StieltjesRep>(*c.function);
  ASSERT_EQ(f.pieces.size(), 1u);
  EXPECT_TRUE(std::isinf(f.pieces[0].hi));
}

TEST(LoadConfig, ParseErrorHasLineAndColumn) {
  const auto path = write_temp("broken.json", "{\n  \"suite\": \"rates\",\n  \"n_grid\": [1, 2,]\n}\n");
  try {
    load_config(path);
    FAIL() << "expected a parse error";
  } catch (const ConfigParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_EQ(e.column(), 19);
    EXPECT_NE(std::string(e.what()).find(":3:19:"), std::string::npos);
  }
}

TEST(LoadConfig, ValidationFailures) {
  const auto check = [](const std::string& text, const std::string& field) {
    const auto path = write_temp("bad.json", text);
    try {
      load_config(path, Suite::rates);
      ADD_FAILURE() << text;
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.field(), field) << text;
    }
  };
  check(R"({"colour": 1})", "colour");
  check(R"({"t_grid": []})", "t_grid");
  check(R"({"t_grid": [0]})", "t_grid[0]");
  check(R"({"n_grid": [1.5]})", "n_grid[0]");
  check(R"({"suite": "kernel"})", "suite");
  check(R"({"alpha_list": [3]})", "alpha_list[0]");
  check(R"({"quadrature": {"rel_tol": -1}})", "quadrature.rel_tol");
  check(R"({"quadrature": {"tol": 1}})", "quadrature.tol");
  check(R"({"output": {"format": "xml"}})", "output.format");
  check(R"({"seed": -3})", "seed");
  check(R"({"generator": {"type": "diagonal", "eigenvalues": [[-1, 0]]}})", "generator");
  check(R"([1, 2])", "");
  EXPECT_THROW(load_config(temp_path("does_not_exist.json")), std::runtime_error);
}

TEST(LoadConfig, SuiteSpecificFunctionShapes) {
  const std::string product = R"({"factors": [{"alpha": 1, "atoms": [[0, 1]]}, {"alpha": 1, "atoms": [[1, 1]]}]})";
  EXPECT_NO_THROW(config_from_json(nlohmann::json::parse(R"({"suite": "sharpness", "function": )" + product + "}")));
  EXPECT_THROW(config_from_json(nlohmann::json::parse(
                   R"({"suite": "sharpness", "function": {"alpha": 1, "atoms": [[0, 1]]}})")),
               ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"suite": "norms", "function": )" + product + "}")),
               ValidationError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_grid": [1]})")), ValidationError);
}

TEST(Emit, CsvHeaderAndRow) {
  const std::string text = format_table(one_row(), Format::csv);
  EXPECT_EQ(text, "n,t,alpha,error,envelope,ratio\n16,1,0.5,0.10000000000000001,0.29999999999999999,"
                  "0.33333333333333331\n");
}

TEST(Emit, JsonAndSvgData) {
  const OrderedJson j = OrderedJson::parse(format_table(one_row(), Format::json));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["n"], 16);
  EXPECT_EQ(j[0].begin().key(), "n");
  const std::string svg = format_table(one_row(), Format::svg_data);
  EXPECT_NE(svg.find("# points alpha=0.5\n1 -1\n"), std::string::npos);
  EXPECT_NE(svg.find("# envelope alpha=0.5\n1 -0.5\n2 -0.75\n"), std::string::npos);
}

TEST(Emit, NonFiniteAndQuotedCells) {
  SuiteResult r{Suite::limits};
  r.table.columns = {"label", "value"};
  r.table.rows.push_back({std::string("a,b"), std::numeric_limits<double>::quiet_NaN()});
  EXPECT_EQ(format_table(r, Format::csv), "label,value\n\"a,b\",nan\n");
  EXPECT_EQ(OrderedJson::parse(format_table(r, Format::json))[0]["value"], "nan");
}

TEST(Emit, ByteIdenticalFiles) {
  const auto a = temp_path("a.csv");
  const auto b = temp_path("b.csv");
  emit(one_row(), Format::csv, a);
  emit(one_row(), Format::csv, b);
  EXPECT_FALSE(slurp(a).empty());
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(Emit, Errors) {
  SuiteResult empty{Suite::rates};
  EXPECT_THROW(emit(empty, Format::csv, temp_path("empty.csv")), DomainError);
  try {
    emit(one_row(), Format::csv, "/nonexistent_dir/out.csv");
    FAIL() << "expected an I/O error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir/out.csv"), std::string::npos);
  }
}

TEST(FitLogLog, ExactPowerLaw) {
  std::vector<double> x, y;
  for (int k = 4; k <= 12; ++k) {
    x.push_back(std::ldexp(1.0, k));
    y.push_back(3.0 * std::pow(x.back(), -0.75));
  }
  const SlopeFit f = fit_loglog(x, y);
  EXPECT_FALSE(f.skipped);
  EXPECT_NEAR(f.slope, -0.75, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_LT(f.standard_error, 1e-12);
  EXPECT_EQ(f.points, 9);
}

TEST(FitLogLog, StandardErrorOracle) {
  // log y = -x' + (+-0.1) alternating: slope -1, residual variance known
  const std::vector<double> lx = {0, 1, 2, 3, 4, 5};
  const std::vector<double> noise = {0.1, -0.1, 0.1, -0.1, 0.1, -0.1};
  std::vector<double> x, y;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    x.push_back(std::exp(lx[i]));
    y.push_back(std::exp(-lx[i] + noise[i]));
  }
  const SlopeFit f = fit_loglog(x, y);
  // centered lx: -2.5..2.5, sxx = 17.5; sxy of noise = -0.3
  const double slope = -1.0 - 0.3 / 17.5;
  EXPECT_NEAR(f.slope, slope, 1e-12);
  double rss = 0.0;
  const double icpt = (0.0 - slope * 15.0 - 15.0) / 6.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = -lx[i] + noise[i] - (icpt + slope * lx[i]);
    rss += e * e;
  }
  EXPECT_NEAR(f.standard_error, std::sqrt(rss / 4.0 / 17.5), 1e-12);
}

TEST(FitLogLog, SkippedFits) {
  EXPECT_TRUE(fit_loglog({1, 2, 3, 4, 5}, {1, 1, 1, 1, 1}).skipped);
  const SlopeFit u = fit_loglog({1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1e-15});
  EXPECT_TRUE(u.skipped);
  EXPECT_EQ(u.reason, "error below 1e-14");
  EXPECT_THROW(fit_loglog({1, 2}, {1}), DimensionError);
}

TEST(Suites, SmallKernelSweep) {
  SweepConfig c = default_config(Suite::kernel);
  c.n_grid = {1, 2};
  c.t_grid = {1.0};
  c.tau_grid = {0.0, 1.0};
  const SuiteResult r = run_suite(c, 1);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.table.rows.size(), 4u);
  EXPECT_EQ(r.table.columns.front(), "n");
  EXPECT_LT(r.summary["max_ratio_main"].get<double>(), 1.0);
}

TEST(Suites, RateSweepOnSmallSpectrum) {
  SweepConfig c = default_config(Suite::rates);
  c.generator = grid_generator(true, 5.0, 500);
  c.alpha_list = {1.0};
  const SuiteResult r = run_suite(c, 2);
  EXPECT_EQ(r.table.rows.size(), 27u);
  const auto& fit = r.summary["fits"][0];
  EXPECT_FALSE(fit["skipped"].get<bool>());
  // a bounded spectrum carries the order-one rate of a smooth vector
  EXPECT_NEAR(fit["slope"].get<double>(), -1.0, 0.05);
  bool bounds_ok = true;
  for (const auto& f : r.failures) bounds_ok = bounds_ok && f["check"] != "rate_bound";
  EXPECT_TRUE(bounds_ok);
  EXPECT_FALSE(r.pass());
}

TEST(Suites, JobsDoNotChangeOutput) {
  SweepConfig c = default_config(Suite::sharpness);
  const std::string one = format_table(run_suite(c, 1), Format::csv);
  const std::string three = format_table(run_suite(c, 3), Format::csv);
  EXPECT_EQ(one, three);
}

TEST(Suites, SharpnessNeedsProbe) {
  SweepConfig c = default_config(Suite::sharpness);
  c.generator = grid_generator(true, 5.0, 7);
  EXPECT_THROW(run_suite(c, 1), MissingProbeError);
}

class Cli : public testing::Test {
 protected:
  void SetUp() override {
    const char* tool = std::getenv("EULER_RATES_TOOL");
    if (!tool) GTEST_SKIP() << "EULER_RATES_TOOL not set";
    tool_ = tool;
  }

  int run(const std::string& args, const std::string& err = "/dev/null") const {
    const std::string cmd = "\"" + tool_ + "\" " + args + " > " + temp_path("stdout.txt") + " 2> " + err;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string tool_;
};

TEST_F(Cli, PassingSuiteWritesTable) {
  const auto cfg = write_temp("cli_kernel.json", R"({"suite": "kernel", "n_grid": [1, 2], "t_grid": [1], "tau_grid": [0, 1]})");
  const auto out = temp_path("cli_kernel.csv");
  EXPECT_EQ(run("kernel --config " + cfg + " --out " + out + " --jobs 2"), 0);
  const std::string text = slurp(out);
  EXPECT_EQ(text.rfind("n,t,tau,", 0), 0u);
  const OrderedJson summary = OrderedJson::parse(slurp(temp_path("stdout.txt")));
  EXPECT_EQ(summary["suite"], "kernel");
  EXPECT_EQ(summary["pass"], true);
}

TEST_F(Cli, FormatsAndDeterminism) {
  const auto cfg = write_temp("cli_limits.json", R"({"suite": "limits"})");
  for (const char* format : {"csv", "json", "svg-data"}) {
    const auto a = temp_path(std::string("lim_a.") + format);
    const auto b = temp_path(std::string("lim_b.") + format);
    ASSERT_EQ(run("limits --config " + cfg + " --format " + format + " --out " + a + " --seed 5"), 0);
    ASSERT_EQ(run("limits --config " + cfg + " --format " + format + " --out " + b + " --seed 5"), 0);
    EXPECT_EQ(slurp(a), slurp(b)) << format;
    EXPECT_FALSE(slurp(a).empty());
  }
}

TEST_F(Cli, CheckFailureExitsOne) {
  // alpha = 1 on i(0, 5] decays like 1/n, so the -1/2 slope check fails
  const auto cfg = write_temp("cli_slope.json", R"({"suite": "rates", "alpha_list": [1],
      "generator": {"type": "grid", "axis": "imaginary", "max": 5, "points": 500}})");
  const auto err = temp_path("stderr.txt");
  EXPECT_EQ(run("rates --config " + cfg + " --out " + temp_path("slope.csv"), err), 1);
  const std::string text = slurp(err);
  const auto pos = text.find("{\"failures\"");
  ASSERT_NE(pos, std::string::npos);
  const OrderedJson f = OrderedJson::parse(text.substr(pos));
  EXPECT_EQ(f["failures"][0]["check"], "rate_slope");
}

TEST_F(Cli, UsageAndConfigErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("rates --format xml"), 2);
  EXPECT_EQ(run("rates --config " + temp_path("missing.json")), 2);
  const auto bad = write_temp("cli_bad.json", R"({"suite": "rates", "n_grid": [0]})");
  const auto err = temp_path("stderr.txt");
  EXPECT_EQ(run("rates --config " + bad, err), 2);
  EXPECT_NE(slurp(err).find("n must be"), std::string::npos);
  const auto broken = write_temp("cli_broken.json", "{\"suite\": ");
  EXPECT_EQ(run("rates --config " + broken), 2);
  const auto mismatch = write_temp("cli_mismatch.json", R"({"suite": "kernel"})");
  EXPECT_EQ(run("rates --config " + mismatch), 2);
}

TEST_F(Cli, ComputationErrorExitsThree) {
  const auto cfg = write_temp("cli_probe.json", R"({"suite": "sharpness",
      "generator": {"type": "grid", "axis": "imaginary", "max": 5, "points": 7}})");
  EXPECT_EQ(run("sharpness --config " + cfg + " --out " + temp_path("probe.csv")), 3);
}

TEST_F(Cli, JobsEnvironmentOverride) {
  const auto cfg = write_temp("cli_env.json", R"({"suite": "kernel", "n_grid": [3], "t_grid": [1], "tau_grid": [0]})");
  const auto a = temp_path("env_a.csv");
  const auto b = temp_path("env_b.csv");
  ASSERT_EQ(run("kernel --config " + cfg + " --out " + a + " --jobs 1"), 0);
  ASSERT_EQ(setenv("EULER_RATES_JOBS", "3", 1), 0);
  const int rc = run("kernel --config " + cfg + " --out " + b + " --jobs 1");
  unsetenv("EULER_RATES_JOBS");
  ASSERT_EQ(rc, 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(resolve_jobs(4), 4);
}

}  // namespace
}  // namespace euler_rates
