#include "lilo/bench/harness.hpp"
#include "lilo/bench/report.hpp"
#include "lilo/errors.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

using namespace lilo;
using namespace lilo::bench;

namespace {

opt::Trace synthetic_trace(const std::string& env, const std::string& method, std::uint64_t seed,
                           const std::vector<double>& max_values) {
  opt::Trace t;
  t.environment = env;
  t.method = method;
  t.seed = seed;
  t.trials.push_back({});
  for (std::size_t i = 0; i < max_values.size(); ++i) {
    opt::TrialRecord r;
    r.trial = static_cast<int>(i) + 1;
    r.max_utility = max_values[i];
    r.best_arm_utility = max_values[i] - 0.01;
    t.trials.push_back(r);
  }
  return t;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

BenchmarkConfig tiny_config(const std::filesystem::path& out) {
  BenchmarkConfig c;
  c.environments = {"dtlz2-l1"};
  c.methods = {"preferential-bo"};
  c.replications = 2;
  c.loop.trials = 2;
  c.loop.batch_exp = 2;
  c.loop.fit.restarts = 2;
  c.loop.acq.restarts = 2;
  c.loop.acq.raw_samples = 32;
  c.output_dir = out;
  return c;
}

}  // namespace

TEST(Report, DescribeUsesSampleSdAndNormalInterval) {
  const Stat s = describe({1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(s.n, 4);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.se, s.sd / 2.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.ci95, 1.96 * s.se);
  EXPECT_EQ(describe({}).n, 0);
  EXPECT_EQ(describe({0.7}).se, 0.0);
}

TEST(Report, MinMaxStandardization) {
  const auto z = min_max_standardize({0.2, 0.5, 0.8});
  ASSERT_EQ(z.size(), 3u);
  EXPECT_NEAR(z[0], 0.0, 1e-15);
  EXPECT_NEAR(z[1], 0.5, 1e-15);
  EXPECT_NEAR(z[2], 1.0, 1e-15);
  EXPECT_EQ(min_max_standardize({0.3, 0.3}), (std::vector<double>{0.0, 0.0}));
}

TEST(Report, CellFormat) {
  EXPECT_EQ(format_cell(0.54, 0.03), "0.54 ± 0.03");
  EXPECT_EQ(format_cell(0.5449, 0.0251), "0.54 ± 0.03");
}

TEST(Report, CsvRoundTrip) {
  const auto report = aggregate({synthetic_trace("e", "a", 1, {0.1, 0.4}), synthetic_trace("e", "a", 2, {0.3, 0.6})});
  const auto parsed = parse_report_csv(report_csv(report));
  ASSERT_EQ(parsed.size(), report.cells.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    EXPECT_EQ(parsed[i].environment, report.cells[i].environment);
    EXPECT_EQ(parsed[i].trial, report.cells[i].trial);
    EXPECT_EQ(parsed[i].max_so_far.mean, report.cells[i].max_so_far.mean);
    EXPECT_EQ(parsed[i].best_point.se, report.cells[i].best_point.se);
  }
  EXPECT_THROW(parse_report_csv("garbage\n"), ParseError);
}

TEST(Report, AggregationIgnoresInputOrder) {
  std::vector<opt::Trace> traces;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const char* env : {"e1", "e2"}) {
    for (const char* m : {"a", "b"}) {
      for (std::uint64_t s = 0; s < 4; ++s) traces.push_back(synthetic_trace(env, m, s, {u(rng), u(rng) + 1.0}));
    }
  }
  const auto base = aggregate(traces);
  std::shuffle(traces.begin(), traces.end(), rng);
  const auto shuffled = aggregate(traces);
  EXPECT_EQ(report_csv(base), report_csv(shuffled));
  EXPECT_EQ(standardized_csv(base), standardized_csv(shuffled));
  EXPECT_TRUE(base.missing.empty());
}

TEST(Report, StandardizedMeansPoolWithinEnvironment) {
  const auto report = aggregate({synthetic_trace("e1", "a", 0, {0.2}), synthetic_trace("e1", "b", 0, {0.8}),
                                 synthetic_trace("e2", "a", 0, {10.0}), synthetic_trace("e2", "b", 0, {20.0})});
  ASSERT_EQ(report.standardized.size(), 2u);
  EXPECT_EQ(report.standardized[0].method, "a");
  EXPECT_DOUBLE_EQ(report.standardized[0].max_so_far.mean, 0.0);
  EXPECT_DOUBLE_EQ(report.standardized[1].max_so_far.mean, 1.0);
}

TEST(Report, TablesOmitMethodsWithoutData) {
  const auto report = aggregate({synthetic_trace("e1", "a", 0, {0.5, 0.6}), synthetic_trace("e2", "b", 0, {0.1})});
  const std::string md = table_markdown(report, "e1");
  EXPECT_NE(md.find("| trial | a |"), std::string::npos);
  EXPECT_EQ(md.find(" b "), std::string::npos);
  EXPECT_NE(md.find("| 2 | 0.60 ± 0.00 |"), std::string::npos);
  EXPECT_EQ(table_csv(report, "e2"), "trial,b_mean,b_se\n1,0.10000000000000001,0\n");
}

TEST(Report, MissingCellsAreListed) {
  const auto report = aggregate({synthetic_trace("e", "a", 0, {0.5}), synthetic_trace("e", "a", 1, {0.5})}, 3,
                                {{"e", "a"}, {"e", "b"}});
  ASSERT_EQ(report.missing.size(), 2u);
  EXPECT_EQ(report.missing[0].found, 2);
  EXPECT_EQ(report.missing[1].method, "b");
  EXPECT_EQ(report.missing[1].found, 0);
}

TEST(Harness, ConfigValidation) {
  EXPECT_THROW(BenchmarkConfig::from_json({{"environments", {"dtlz2-l1"}}, {"methods", {"lilo"}}, {"extra", 1}}),
               ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json({{"environments", {"nope"}}, {"methods", {"lilo"}}}), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json({{"environments", {"dtlz2-l1"}}, {"methods", {"llm-direct"}}}), ConfigError);
  EXPECT_THROW(BenchmarkConfig::from_json(
                   {{"environments", {"dtlz2-l1"}}, {"methods", {"lilo"}}, {"backend", "scripted:/no/such/file"}}),
               ConfigError);
  const auto c = BenchmarkConfig::from_json({{"environments", {"thermal-a"}}, {"methods", {"lilo", "true-utility-bo"}}});
  EXPECT_EQ(BenchmarkConfig::from_json(c.to_json()).to_json(), c.to_json());
  EXPECT_NE(replicate_seed(c, 0), replicate_seed(c, 1));
}

TEST(Harness, RunPersistsTracesAndResumesIdentically) {
  const auto dir = fresh_dir("lilo_bench_run");
  const BenchmarkConfig c = tiny_config(dir);
  const auto first = run_benchmark(c);
  EXPECT_EQ(first.completed, 2);
  EXPECT_EQ(first.exit_code(), 0);
  EXPECT_TRUE(std::filesystem::exists(trace_path(dir, "dtlz2-l1", "preferential-bo", 0)));
  EXPECT_TRUE(std::filesystem::exists(trace_path(dir, "dtlz2-l1", "preferential-bo", 1)));
  const std::string report = slurp(dir / "report" / "report.csv");
  const std::string trace1 = slurp(trace_path(dir, "dtlz2-l1", "preferential-bo", 1));

  const auto second = run_benchmark(c);
  EXPECT_EQ(second.reused, 2);
  EXPECT_EQ(slurp(dir / "report" / "report.csv"), report);

  std::filesystem::remove(trace_path(dir, "dtlz2-l1", "preferential-bo", 1));
  const auto third = run_benchmark(c, {std::nullopt, std::nullopt, 1});
  EXPECT_EQ(third.total, 1);
  EXPECT_EQ(slurp(trace_path(dir, "dtlz2-l1", "preferential-bo", 1)), trace1);
  EXPECT_EQ(slurp(dir / "report" / "report.csv"), report);
  std::filesystem::remove_all(dir);
}

TEST(Harness, FailedReplicatesAreRecorded) {
  const auto dir = fresh_dir("lilo_bench_fail");
  std::filesystem::create_directories(dir);
  {
    std::ofstream script(dir / "empty_script.json");
    script << "{}";
  }
  BenchmarkConfig c = tiny_config(dir / "out");
  c.methods = {"lilo"};
  c.backend = "scripted:" + (dir / "empty_script.json").string();
  const auto summary = run_benchmark(c);
  EXPECT_EQ(summary.failures.size(), 2u);
  EXPECT_EQ(summary.exit_code(), 1);
  ASSERT_EQ(summary.report.missing.size(), 1u);
  EXPECT_EQ(summary.report.missing[0].found, 0);
  EXPECT_FALSE(slurp(dir / "out" / "failures.jsonl").empty());
  std::filesystem::remove_all(dir);
}
