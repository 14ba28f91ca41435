#pragma once

#include "lilo/env/environment.hpp"
#include "lilo/gp/posterior.hpp"
#include "lilo/opt/agents.hpp"
#include "lilo/opt/config.hpp"
#include "lilo/opt/trace.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace lilo::opt {

enum class Method { Lilo, Llm2Step, LlmDirect };

std::string to_string(Method m);
Method parse_method(const std::string& text);

inline constexpr const char* kGoalQuestion = "What is your goal?";

struct ProxyModels {
  gp::ModelPtr mx;
  gp::ModelPtr my;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<LabeledPair> labeled_pairs;
  std::vector<ScalarLabel> scalar_labels;
};

/// Selects K outcome pairs (random without a previous outcome model), labels
/// them through the agent and fits pairwise GPs on outcomes and on inputs.
ProxyModels fit_proxy_models_pairwise(const env::Environment& env, Agent& agent, const ExperimentDataset& data,
                                      const FeedbackDataset& feedback, const ProxyModels* previous,
                                      const LoopConfig& config, int trial);

/// Estimates every arm's utility through the agent, one regression row per
/// replicate, and fits regression GPs on outcomes and on inputs.
ProxyModels fit_proxy_models_scalar(const env::Environment& env, Agent& agent, const ExperimentDataset& data,
                                    const FeedbackDataset& feedback, const LoopConfig& config, int trial);

/// Rebuilds models from labels recorded in a trace, without agent calls.
ProxyModels refit_from_record(const env::Environment& env, const ExperimentDataset& data, const TrialRecord& record,
                              const LoopConfig& config);

/// The language-in-the-loop schedule as a step machine: each call to
/// submit() consumes the DM's answers to the pending questions and advances
/// to the next set of questions (or finishes).
class LiloEngine {
 public:
  LiloEngine(env::EnvironmentPtr env, std::shared_ptr<Agent> agent, LoopConfig config, Method method = Method::Lilo);

  /// Entry exchange: the goal question plus B_pf - 1 agent questions.
  void begin();
  void submit(const std::vector<std::string>& answers);

  bool started() const { return started_; }
  bool finished() const { return finished_; }
  /// 0 during the entry exchange.
  int trial() const { return trial_; }
  const std::vector<std::string>& pending() const { return pending_; }
  const Trace& trace() const { return trace_; }
  const ExperimentDataset& experiments() const { return data_; }
  const FeedbackDataset& feedback() const { return feedback_; }
  const LoopConfig& config() const { return config_; }
  Method method() const { return method_; }
  const env::Environment& environment() const { return *env_; }

  nlohmann::json snapshot() const;
  /// Inverse of snapshot(); models are refit from the recorded labels.
  static std::unique_ptr<LiloEngine> restore(const nlohmann::json& state, env::EnvironmentPtr env,
                                             std::shared_ptr<Agent> agent);

 private:
  void start_trial(int n);
  Matrix candidates(int n);
  std::optional<std::vector<int>> highlight(int n) const;

  env::EnvironmentPtr env_;
  std::shared_ptr<Agent> agent_;
  LoopConfig config_;
  Method method_;
  bool started_ = false;
  bool finished_ = false;
  int trial_ = 0;
  std::vector<std::string> pending_;
  ExperimentDataset data_;
  FeedbackDataset feedback_;
  Trace trace_;
  std::unique_ptr<ProxyModels> models_;
};

/// Drives the engine with a simulated decision maker. The goal question is
/// answered with the environment's seed message.
Trace run_lilo(env::EnvironmentPtr env, std::shared_ptr<Agent> agent, DecisionMaker& dm, const LoopConfig& config,
               Method method = Method::Lilo);

}  // namespace lilo::opt
