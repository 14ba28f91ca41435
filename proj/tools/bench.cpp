#include "lilo/bench/harness.hpp"
#include "lilo/env/environment.hpp"
#include "lilo/errors.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <iostream>

using namespace lilo;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfigError = 2;

int cmd_run(const std::string& config_path, const std::optional<std::string>& output, int workers, int replications,
            const bench::CellFilter& filter) {
  bench::BenchmarkConfig config = bench::BenchmarkConfig::load(config_path);
  if (output) config.output_dir = *output;
  if (workers > 0) config.workers = workers;
  if (replications > 0) config.replications = replications;
  const auto summary = bench::run_benchmark(config, filter);
  for (const auto& env : summary.report.environments()) {
    std::cout << "## " << env << "\n\n" << bench::table_markdown(summary.report, env) << "\n";
  }
  std::cout << fmt::format("{} replicates: {} run, {} reused, {} failed\n", summary.total, summary.completed,
                           summary.reused, summary.failures.size());
  for (const auto& m : summary.report.missing) {
    std::cout << fmt::format("missing: {} / {} has {} of {} replicates\n", m.environment, m.method, m.found, m.expected);
  }
  std::cout << "report written to " << (config.output_dir / "report").string() << "\n";
  return summary.exit_code() == 0 ? kOk : kPartial;
}

int cmd_report(const std::string& traces, const std::string& out, const std::string& format) {
  bench::TableFormat f = bench::TableFormat::Both;
  if (format == "csv") f = bench::TableFormat::Csv;
  else if (format == "markdown") f = bench::TableFormat::Markdown;
  const auto report = bench::aggregate(bench::load_traces(traces));
  bench::write_report(report, out, f);
  for (const auto& env : report.environments()) {
    std::cout << "## " << env << "\n\n" << bench::table_markdown(report, env) << "\n";
  }
  return report.missing.empty() ? kOk : kPartial;
}

int cmd_env_list() {
  for (const auto& id : env::registry_ids()) {
    const auto e = env::make_environment(id);
    std::cout << fmt::format("{:<18} d={:<2} k={:<2} utility={}\n", id, e->input_dim(), e->outcome_dim(),
                             env::to_string(e->utility_spec().kind));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark runner for language-in-the-loop optimization"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  auto* run = app.add_subcommand("run", "Run the environment x method matrix from a config file");
  std::string config_path;
  std::optional<std::string> output;
  int workers = 0, replications = 0;
  std::optional<std::string> only_env, only_method;
  std::optional<int> only_rep;
  run->add_option("--config", config_path, "JSON benchmark config")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "Override output_dir");
  run->add_option("--workers", workers, "Override the worker count");
  run->add_option("--replications", replications, "Override the replication count");
  run->add_option("--env", only_env, "Run only this environment");
  run->add_option("--method", only_method, "Run only this method");
  run->add_option("--replicate", only_rep, "Run only this replicate index");

  auto* report = app.add_subcommand("report", "Aggregate trace files into tables");
  std::string traces, out = "report", format = "both";
  report->add_option("--traces", traces, "Directory of trace files")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out, "Output directory");
  report->add_option("--format", format, "csv, markdown or both")->check(CLI::IsMember({"csv", "markdown", "both"}));

  auto* env_cmd = app.add_subcommand("env", "Environment registry");
  env_cmd->require_subcommand(1);
  auto* env_list = env_cmd->add_subcommand("list", "List registered environments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run) return cmd_run(config_path, output, workers, replications, {only_env, only_method, only_rep});
    if (*report) return cmd_report(traces, out, format);
    if (*env_list) return cmd_env_list();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPartial;
  }
  return kOk;
}
