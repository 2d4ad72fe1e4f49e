// Command-line front end: one subcommand per suite.
//
//   euler_rates <kernel|norms|rates|sharpness|limits> [--config FILE] [--out FILE]
//               [--format csv|json|svg-data] [--jobs N] [--seed S]
//
// Exit codes: 0 all checks pass, 1 check failures, 2 configuration or usage
// error, 3 computation error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "euler_rates/report.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;
constexpr int kExitComputation = 3;

void print_error(const std::string& kind, const std::string& message) {
  const euler_rates::OrderedJson j = {{"error", kind}, {"message", message}};
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  using namespace euler_rates;

  CLI::App app{"Euler approximation rate-certification lab"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_path;
  std::string format_text;
  int jobs = 0;
  std::optional<std::uint64_t> seed;

  for (Suite s : {Suite::kernel, Suite::norms, Suite::rates, Suite::sharpness, Suite::limits}) {
    CLI::App* sub = app.add_subcommand(suite_name(s), "run the " + suite_name(s) + " suite");
    sub->add_option("--config", config_path, "JSON sweep configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out_path, "output file (default: standard output)");
    sub->add_option("--format", format_text, "csv, json or svg-data")
        ->check(CLI::IsMember({"csv", "json", "svg-data"}));
    sub->add_option("--jobs", jobs, "worker threads (EULER_RATES_JOBS overrides)")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for random test vectors");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  const Suite suite = parse_suite(app.get_subcommands().front()->get_name());

  SweepConfig config;
  try {
    config = config_path.empty() ? default_config(suite) : load_config(config_path, suite);
    if (!format_text.empty()) config.output.format = parse_format(format_text);
    if (!out_path.empty()) config.output.path = out_path;
    if (seed) config.seed = *seed;
  } catch (const ConfigParseError& e) {
    print_error("parse", e.what());
    return kExitUsage;
  } catch (const ValidationError& e) {
    print_error("validation", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error("config", e.what());
    return kExitUsage;
  }

  SuiteResult result;
  try {
    result = run_suite(config, resolve_jobs(jobs));
    emit(result, config.output.format, config.output.path);
  } catch (const ValidationError& e) {
    print_error("validation", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error("computation", e.what());
    return kExitComputation;
  }

  // The table owns standard output when no --out is given.
  std::FILE* summary_stream = config.output.path.empty() ? stderr : stdout;
  std::fprintf(summary_stream, "%s\n", result.summary.dump().c_str());

  if (!result.pass()) {
    OrderedJson f = {{"failures", result.failures}};
    std::fprintf(stderr, "%s\n", f.dump().c_str());
    return kExitFailures;
  }
  return kExitPass;
}
