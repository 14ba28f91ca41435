#include "lilo/bench/harness.hpp"

#include "lilo/env/environment.hpp"
#include "lilo/errors.hpp"
#include "lilo/llm/backend.hpp"
#include "lilo/opt/agents.hpp"
#include "lilo/opt/baselines.hpp"
#include "lilo/opt/lilo.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

namespace lilo::bench {

namespace {

bool is_baseline(const std::string& method) { return method == "true-utility-bo" || method == "preferential-bo"; }

bool needs_language_model(const std::string& method) { return method == "llm-2step" || method == "llm-direct"; }

bool is_scripted(const nlohmann::json& backend) {
  return backend.is_string() && backend.get<std::string>().rfind("scripted:", 0) == 0;
}

bool is_oracle(const nlohmann::json& backend) { return backend.is_string() && backend.get<std::string>() == "oracle"; }

}  // namespace

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"lilo",        "lilo-scalar", "true-utility-bo", "preferential-bo",
                                              "llm-2step",   "llm-direct"};
  return names;
}

void BenchmarkConfig::validate() const {
  std::vector<std::string> bad;
  if (environments.empty()) bad.push_back("environments must not be empty");
  for (const auto& e : environments) {
    if (!env::is_registered(e)) bad.push_back("unknown environment '" + e + "'");
  }
  if (methods.empty()) bad.push_back("methods must not be empty");
  for (const auto& m : methods) {
    if (std::find(method_names().begin(), method_names().end(), m) == method_names().end()) {
      bad.push_back("unknown method '" + m + "'");
    } else if (needs_language_model(m) && is_oracle(backend)) {
      bad.push_back("method '" + m + "' needs a language-model backend, not the oracle");
    }
  }
  if (replications < 1) bad.push_back("replications must be >= 1");
  if (workers < 1) bad.push_back("workers must be >= 1");
  if (output_dir.empty()) bad.push_back("output_dir must not be empty");
  if (backend.is_string()) {
    if (!is_oracle(backend) && !is_scripted(backend) && backend.get<std::string>() != "synthetic") {
      bad.push_back("backend must be 'oracle', 'synthetic', 'scripted:<path>' or an object");
    }
    if (is_scripted(backend) && !std::filesystem::exists(backend.get<std::string>().substr(9))) {
      bad.push_back("scripted backend file not found: " + backend.get<std::string>().substr(9));
    }
  } else if (!backend.is_object() || !backend.contains("kind")) {
    bad.push_back("backend object needs a 'kind'");
  }
  try {
    loop.validate();
  } catch (const ConfigError& e) {
    bad.push_back(e.what());
  }
  try {
    bridge.validate();
  } catch (const ConfigError& e) {
    bad.push_back(e.what());
  }
  if (!bad.empty()) {
    std::string msg = "benchmark config:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw ConfigError(msg);
  }
}

nlohmann::json BenchmarkConfig::to_json() const {
  return {{"environments", environments},
          {"methods", methods},
          {"replications", replications},
          {"loop", loop.to_json()},
          {"backend", backend},
          {"bridge", bridge.to_json()},
          {"output_dir", output_dir.string()},
          {"workers", workers}};
}

BenchmarkConfig BenchmarkConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("benchmark config must be a JSON object");
  BenchmarkConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "environments") c.environments = value.get<std::vector<std::string>>();
      else if (key == "methods") c.methods = value.get<std::vector<std::string>>();
      else if (key == "replications") c.replications = value.get<int>();
      else if (key == "loop") c.loop = opt::LoopConfig::from_json(value);
      else if (key == "backend") c.backend = value;
      else if (key == "bridge") c.bridge = llm::BridgeConfig::from_json(value);
      else if (key == "output_dir") c.output_dir = value.get<std::string>();
      else if (key == "workers") c.workers = value.get<int>();
      else throw ConfigError("benchmark config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("benchmark config: ") + e.what());
  }
  c.validate();
  return c;
}

BenchmarkConfig BenchmarkConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return from_json(j);
}

std::filesystem::path trace_path(const std::filesystem::path& output_dir, const std::string& environment,
                                 const std::string& method, int replicate) {
  return output_dir / "traces" / environment / method / fmt::format("rep_{:03d}.jsonl", replicate);
}

std::uint64_t replicate_seed(const BenchmarkConfig& config, int replicate) {
  return config.loop.seed + static_cast<std::uint64_t>(replicate);
}

opt::Trace run_replicate(const BenchmarkConfig& config, const std::string& environment, const std::string& method,
                         int replicate, const std::optional<std::filesystem::path>& transcript) {
  const auto env = env::make_environment(environment);
  opt::LoopConfig loop = config.loop;
  loop.seed = replicate_seed(config, replicate);
  opt::Trace trace;
  if (method == "true-utility-bo") {
    trace = opt::run_true_utility_bo(*env, loop);
  } else if (method == "preferential-bo") {
    trace = opt::run_preferential_bo(*env, loop);
  } else {
    opt::Method m = opt::Method::Lilo;
    if (method == "lilo-scalar") loop.proxy_mode = opt::ProxyMode::Scalar;
    else if (method != "lilo") m = opt::parse_method(method);
    std::shared_ptr<opt::Agent> agent;
    std::unique_ptr<opt::DecisionMaker> dm;
    if (is_oracle(config.backend)) {
      agent = std::make_shared<opt::OracleAgent>(loop.llm_samples);
      dm = std::make_unique<opt::OracleDm>();
    } else {
      llm::BridgeConfig bc = config.bridge;
      bc.seed = loop.seed;
      bc.n_samples = loop.llm_samples;
      auto log = transcript ? std::make_shared<llm::TranscriptLog>(*transcript) : nullptr;
      auto bridge = std::make_shared<llm::LanguageBridge>(llm::backend_from_spec(config.backend), bc, log);
      agent = std::make_shared<opt::LlmAgent>(bridge);
      dm = std::make_unique<opt::LlmDm>(bridge);
    }
    trace = opt::run_lilo(env, agent, *dm, loop, m);
  }
  trace.method = method;
  trace.environment = environment;
  trace.seed = loop.seed;
  return trace;
}

int RunSummary::exit_code() const {
  return static_cast<long>(failures.size()) * 10 > static_cast<long>(total) ? 1 : 0;
}

RunSummary run_benchmark(const BenchmarkConfig& config, const CellFilter& filter) {
  config.validate();
  std::filesystem::create_directories(config.output_dir / "traces");
  {
    std::ofstream out(config.output_dir / "config.json");
    out << config.to_json().dump(2) << "\n";
  }

  struct Job {
    std::string environment;
    std::string method;
    int replicate;
  };
  std::vector<Job> jobs;
  for (const auto& e : config.environments) {
    if (filter.environment && *filter.environment != e) continue;
    for (const auto& m : config.methods) {
      if (filter.method && *filter.method != m) continue;
      for (int r = 0; r < config.replications; ++r) {
        if (filter.replicate && *filter.replicate != r) continue;
        jobs.push_back({e, m, r});
      }
    }
  }

  RunSummary summary;
  summary.total = static_cast<int>(jobs.size());
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      const auto path = trace_path(config.output_dir, job.environment, job.method, job.replicate);
      if (std::filesystem::exists(path)) {
        try {
          opt::Trace::read(path);
          std::lock_guard lock(mu);
          ++summary.reused;
          continue;
        } catch (const std::exception& e) {
          spdlog::warn("re-running {}: unreadable trace: {}", path.string(), e.what());
        }
      }
      spdlog::info("running {} / {} / replicate {} (seed {})", job.environment, job.method, job.replicate,
                   replicate_seed(config, job.replicate));
      try {
        std::optional<std::filesystem::path> transcript;
        if (!is_baseline(job.method) && !is_oracle(config.backend)) {
          transcript = path;
          transcript->replace_extension(".transcript.jsonl");
          std::filesystem::create_directories(path.parent_path());
          std::filesystem::remove(*transcript);
        }
        const opt::Trace trace = run_replicate(config, job.environment, job.method, job.replicate, transcript);
        trace.write(path);
        std::lock_guard lock(mu);
        ++summary.completed;
      } catch (const std::exception& e) {
        spdlog::error("{} / {} / replicate {} failed: {}", job.environment, job.method, job.replicate, e.what());
        std::lock_guard lock(mu);
        summary.failures.push_back({job.environment, job.method, job.replicate, e.what()});
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::max(1, std::min<int>(config.workers, static_cast<int>(jobs.size())));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::sort(summary.failures.begin(), summary.failures.end(), [](const auto& a, const auto& b) {
    return std::tie(a.environment, a.method, a.replicate) < std::tie(b.environment, b.method, b.replicate);
  });
  {
    std::ofstream out(config.output_dir / "failures.jsonl");
    for (const auto& f : summary.failures) {
      out << nlohmann::json{{"environment", f.environment}, {"method", f.method}, {"replicate", f.replicate},
                            {"message", f.message}}
                 .dump()
          << "\n";
    }
  }

  std::vector<std::pair<std::string, std::string>> cells;
  for (const auto& e : config.environments) {
    for (const auto& m : config.methods) cells.emplace_back(e, m);
  }
  summary.report = aggregate(load_traces(config.output_dir / "traces"), config.replications, cells);
  write_report(summary.report, config.output_dir / "report");
  return summary;
}

}  // namespace lilo::bench
