#pragma once

#include "lilo/bench/report.hpp"
#include "lilo/llm/bridge.hpp"
#include "lilo/opt/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lilo::bench {

/// lilo, lilo-scalar, true-utility-bo, preferential-bo, llm-2step, llm-direct
const std::vector<std::string>& method_names();

struct BenchmarkConfig {
  std::vector<std::string> environments;
  std::vector<std::string> methods;
  int replications = 30;
  opt::LoopConfig loop;
  /// "oracle", "synthetic", "scripted:<path>" or a chat-backend object such as
  /// {"kind": "http", "base_url": ..., "model": ...}.
  nlohmann::json backend = "oracle";
  llm::BridgeConfig bridge;
  std::filesystem::path output_dir = "bench-out";
  int workers = 1;

  /// Throws ConfigError listing every problem.
  void validate() const;
  nlohmann::json to_json() const;
  static BenchmarkConfig from_json(const nlohmann::json& j);
  static BenchmarkConfig load(const std::filesystem::path& path);
};

std::filesystem::path trace_path(const std::filesystem::path& output_dir, const std::string& environment,
                                 const std::string& method, int replicate);
std::uint64_t replicate_seed(const BenchmarkConfig& config, int replicate);

/// One cell of the matrix. Writes nothing.
opt::Trace run_replicate(const BenchmarkConfig& config, const std::string& environment, const std::string& method,
                         int replicate, const std::optional<std::filesystem::path>& transcript = std::nullopt);

struct ReplicateFailure {
  std::string environment;
  std::string method;
  int replicate = 0;
  std::string message;
};

struct RunSummary {
  int total = 0;
  int completed = 0;
  int reused = 0;
  std::vector<ReplicateFailure> failures;
  AggregateReport report;

  /// 0 ok, 1 when more than 10% of replicates failed.
  int exit_code() const;
};

struct CellFilter {
  std::optional<std::string> environment;
  std::optional<std::string> method;
  std::optional<int> replicate;
};

/// Runs every missing cell on a worker pool, persists traces under
/// output_dir/traces, then aggregates from the files on disk.
RunSummary run_benchmark(const BenchmarkConfig& config, const CellFilter& filter = {});

}  // namespace lilo::bench
