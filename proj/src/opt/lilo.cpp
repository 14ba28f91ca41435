#include "lilo/opt/lilo.hpp"

#include "lilo/acq/acquisition.hpp"
#include "lilo/errors.hpp"
#include "lilo/gp/pairwise_gp.hpp"
#include "lilo/gp/regression_gp.hpp"
#include "lilo/opt/common.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace lilo::opt {

std::string to_string(Method m) {
  switch (m) {
    case Method::Lilo: return "lilo";
    case Method::Llm2Step: return "llm-2step";
    case Method::LlmDirect: return "llm-direct";
  }
  return "lilo";
}

Method parse_method(const std::string& text) {
  for (auto m : {Method::Lilo, Method::Llm2Step, Method::LlmDirect}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("unknown method '" + text + "' (expected lilo, llm-2step or llm-direct)");
}

namespace {

gp::FitConfig fit_config(const LoopConfig& config, const char* purpose, int trial) {
  gp::FitConfig fit = config.fit;
  fit.seed = derive_seed(config.seed, purpose, trial);
  return fit;
}

ProxyModels fit_pairwise(const env::Environment& env, const ExperimentDataset& data,
                         const std::vector<Comparison>& comparisons, const LoopConfig& config, int trial) {
  if (comparisons.empty()) throw NumericalError("trial " + std::to_string(trial) + ": no usable pairwise labels to fit");
  const CompactComparisons cc = compact(comparisons);
  auto my = std::make_shared<gp::PairwiseGp>(gp::PairwiseGp::fit(
      rows_of(outcomes_of(data), cc.items), cc.comparisons, fit_config(config, "fit-my", trial), outcome_scaling(env)));
  auto mx = std::make_shared<gp::PairwiseGp>(gp::PairwiseGp::fit(rows_of(inputs_of(data), cc.items), cc.comparisons,
                                                                 fit_config(config, "fit-mx", trial),
                                                                 input_scaling(env.space())));
  ProxyModels out;
  out.summary = {{"my", summarize(*my)}, {"mx", summarize(*mx)}};
  out.my = std::move(my);
  out.mx = std::move(mx);
  return out;
}

ProxyModels fit_scalar(const env::Environment& env, const ExperimentDataset& data,
                       const std::vector<std::pair<int, double>>& rows, const LoopConfig& config, int trial) {
  if (rows.empty()) throw NumericalError("trial " + std::to_string(trial) + ": no utility estimates to fit");
  std::vector<int> idx;
  Vector targets(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    idx.push_back(rows[i].first);
    targets[static_cast<Eigen::Index>(i)] = rows[i].second;
  }
  auto my = std::make_shared<gp::RegressionGp>(gp::RegressionGp::fit(
      rows_of(outcomes_of(data), idx), targets, fit_config(config, "fit-my", trial), outcome_scaling(env)));
  auto mx = std::make_shared<gp::RegressionGp>(gp::RegressionGp::fit(
      rows_of(inputs_of(data), idx), targets, fit_config(config, "fit-mx", trial), input_scaling(env.space())));
  ProxyModels out;
  out.summary = {{"my", summarize(*my)}, {"mx", summarize(*mx)}};
  out.my = std::move(my);
  out.mx = std::move(mx);
  return out;
}

void append_votes(const llm::LabelVote& v, std::vector<Comparison>& comparisons) {
  for (int vote : v.votes) {
    comparisons.push_back(vote == 0 ? Comparison{v.first, v.second} : Comparison{v.second, v.first});
  }
}

}  // namespace

ProxyModels fit_proxy_models_pairwise(const env::Environment& env, Agent& agent, const ExperimentDataset& data,
                                      const FeedbackDataset& feedback, const ProxyModels* previous,
                                      const LoopConfig& config, int trial) {
  if (data.size() < 2) throw InputError("fit_proxy_models_pairwise: need at least two experiments");
  const gp::PosteriorModel* model = nullptr;
  Matrix items = outcomes_of(data);
  if (previous != nullptr && config.pair_strategy == acq::PairStrategy::EuboY) model = previous->my.get();
  if (previous != nullptr && config.pair_strategy == acq::PairStrategy::EuboX) {
    model = previous->mx.get();
    items = inputs_of(data);
  }
  const auto pairs =
      acq::select_top_pairs(model, items, config.num_pairs, config.pair_strategy, derive_seed(config.seed, "pairs", trial));
  const std::string summary = agent.summarize(env, data, feedback, trial);
  const auto votes = agent.label_pairs(env, data, feedback, summary, pairs, trial);

  std::vector<Comparison> comparisons;
  std::vector<LabeledPair> labeled;
  for (const auto& v : votes) {
    if (v.dropped || v.votes.empty()) continue;
    append_votes(v, comparisons);
    labeled.push_back({data[v.first].arm_index, data[v.second].arm_index, v.votes});
  }
  ProxyModels out = fit_pairwise(env, data, comparisons, config, trial);
  out.labeled_pairs = std::move(labeled);
  return out;
}

ProxyModels fit_proxy_models_scalar(const env::Environment& env, Agent& agent, const ExperimentDataset& data,
                                    const FeedbackDataset& feedback, const LoopConfig& config, int trial) {
  if (data.empty()) throw InputError("fit_proxy_models_scalar: no experiments");
  const std::string summary = agent.summarize(env, data, feedback, trial);
  const auto estimates = agent.estimate_utilities(env, data, feedback, summary, trial);
  std::vector<std::pair<int, double>> rows;
  std::vector<ScalarLabel> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto it = estimates.samples.find(data[i].arm_index);
    if (it == estimates.samples.end()) continue;
    for (double p : it->second) rows.emplace_back(static_cast<int>(i), p);
    labels.push_back({data[i].arm_index, it->second});
  }
  ProxyModels out = fit_scalar(env, data, rows, config, trial);
  out.scalar_labels = std::move(labels);
  return out;
}

ProxyModels refit_from_record(const env::Environment& env, const ExperimentDataset& data, const TrialRecord& record,
                              const LoopConfig& config) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < data.size(); ++i) index[data[i].arm_index] = static_cast<int>(i);
  auto at = [&](const std::string& arm) {
    auto it = index.find(arm);
    if (it == index.end()) throw InputError("refit: unknown arm " + arm);
    return it->second;
  };
  ProxyModels out;
  if (!record.labeled_pairs.empty()) {
    std::vector<Comparison> comparisons;
    for (const auto& lp : record.labeled_pairs) append_votes({at(lp.a), at(lp.b), lp.votes, {}, 0, false}, comparisons);
    out = fit_pairwise(env, data, comparisons, config, record.trial);
    out.labeled_pairs = record.labeled_pairs;
  } else if (!record.scalar_labels.empty()) {
    std::vector<std::pair<int, double>> rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (const auto& sl : record.scalar_labels) {
        if (sl.arm_index != data[i].arm_index) continue;
        for (double p : sl.values) rows.emplace_back(static_cast<int>(i), p);
      }
    }
    out = fit_scalar(env, data, rows, config, record.trial);
    out.scalar_labels = record.scalar_labels;
  } else {
    throw InputError("refit: trial " + std::to_string(record.trial) + " has no labels");
  }
  return out;
}

LiloEngine::LiloEngine(env::EnvironmentPtr env, std::shared_ptr<Agent> agent, LoopConfig config, Method method)
    : env_(std::move(env)), agent_(std::move(agent)), config_(std::move(config)), method_(method) {
  if (!env_) throw ConfigError("lilo: no environment");
  if (!agent_) throw ConfigError("lilo: no agent");
  config_.validate();
  trace_.method = to_string(method_);
  trace_.environment = env_->id();
  trace_.seed = config_.seed;
  trace_.config = config_.to_json();
}

void LiloEngine::begin() {
  if (started_) throw ConflictError("lilo: already started");
  std::vector<std::string> questions{kGoalQuestion};
  if (config_.batch_pf > 1) {
    const auto more = agent_->init_questions(*env_, {}, config_.batch_pf - 1, 0);
    questions.insert(questions.end(), more.begin(), more.end());
  }
  TrialRecord rec;
  rec.trial = 0;
  rec.questions = questions;
  trace_.trials.push_back(std::move(rec));
  pending_ = std::move(questions);
  started_ = true;
}

Matrix LiloEngine::candidates(int n) {
  const int q = config_.effective_batch_exp(env_->input_dim());
  if (n == 1) {
    if (config_.prior_text && !config_.prior_text->empty()) {
      return agent_->prior_candidates(*env_, feedback_, *config_.prior_text, q, n);
    }
    return initial_design(env_->space(), q, derive_seed(config_.seed, "init", n), config_.sobol_init);
  }
  switch (method_) {
    case Method::Lilo: {
      acq::AcqConfig acq = config_.acq;
      acq.seed = derive_seed(config_.seed, "acq", n);
      return acq::optimize_acqf(models_->mx, inputs_of(data_), env_->space(), q, acq).points;
    }
    case Method::Llm2Step:
      return agent_->candidates_2step(*env_, data_, models_->my->posterior_mean(outcomes_of(data_)), feedback_, q, n);
    case Method::LlmDirect:
      return agent_->candidates_direct(*env_, data_, feedback_, q, n);
  }
  return {};
}

std::optional<std::vector<int>> LiloEngine::highlight(int n) const {
  if (method_ != Method::Lilo) return std::nullopt;
  std::vector<int> out;
  if (data_.size() < 2) {
    for (std::size_t i = 0; i < data_.size(); ++i) out.push_back(static_cast<int>(i));
    return out;
  }
  const gp::PosteriorModel* model = nullptr;
  Matrix items = outcomes_of(data_);
  if (n > 1 && models_) {
    if (config_.pair_strategy == acq::PairStrategy::EuboY) model = models_->my.get();
    if (config_.pair_strategy == acq::PairStrategy::EuboX) {
      model = models_->mx.get();
      items = inputs_of(data_);
    }
  }
  const auto pairs = acq::select_top_pairs(model, items, config_.batch_pf, config_.pair_strategy,
                                           derive_seed(config_.seed, "highlight", n));
  std::set<int> unique;
  for (const auto& p : pairs) {
    unique.insert(p.first);
    unique.insert(p.second);
  }
  out.assign(unique.begin(), unique.end());
  return out;
}

void LiloEngine::start_trial(int n) {
  if (n > 1 && method_ != Method::LlmDirect && !models_) throw NumericalError("lilo: no proxy model for trial " + std::to_string(n));
  TrialRecord rec;
  rec.trial = n;
  run_experiments(*env_, candidates(n), n, data_, rec);
  const auto hl = highlight(n);
  if (hl) {
    for (int i : *hl) rec.highlighted.push_back(data_[static_cast<std::size_t>(i)].arm_index);
  }
  rec.questions = agent_->questions(*env_, data_, feedback_, hl, config_.batch_pf, n);
  pending_ = rec.questions;
  trace_.trials.push_back(std::move(rec));
  trial_ = n;
}

void LiloEngine::submit(const std::vector<std::string>& answers) {
  if (!started_) throw ConflictError("lilo: not started");
  if (finished_) throw ConflictError("lilo: run already finished");
  if (answers.size() != pending_.size()) {
    throw InputError("lilo: expected " + std::to_string(pending_.size()) + " answers, got " +
                     std::to_string(answers.size()));
  }

  // Roll back to this state if any step below fails.
  const ExperimentDataset data_before = data_;
  const FeedbackDataset feedback_before = feedback_;
  const Trace trace_before = trace_;
  const std::vector<std::string> pending_before = pending_;
  const int trial_before = trial_;
  std::unique_ptr<ProxyModels> models_before = models_ ? std::make_unique<ProxyModels>(*models_) : nullptr;
  try {
    for (std::size_t i = 0; i < answers.size(); ++i) feedback_.push_back({pending_[i], answers[i]});
    trace_.trials.back().answers = answers;
    if (trial_ > 0) {
      TrialRecord& rec = trace_.trials.back();
      if (method_ != Method::LlmDirect) {
        ProxyModels fitted = config_.proxy_mode == ProxyMode::Pairwise
                                 ? fit_proxy_models_pairwise(*env_, *agent_, data_, feedback_, models_.get(), config_,
                                                             trial_)
                                 : fit_proxy_models_scalar(*env_, *agent_, data_, feedback_, config_, trial_);
        models_ = std::make_unique<ProxyModels>(std::move(fitted));
        rec.labeled_pairs = models_->labeled_pairs;
        rec.scalar_labels = models_->scalar_labels;
        rec.models = models_->summary;
      }
      record_metrics(*env_, data_, models_ ? models_->my.get() : nullptr, rec);
    }
    if (trial_ < config_.trials) {
      start_trial(trial_ + 1);
    } else {
      finished_ = true;
      pending_.clear();
    }
  } catch (...) {
    data_ = data_before;
    feedback_ = feedback_before;
    trace_ = trace_before;
    pending_ = pending_before;
    trial_ = trial_before;
    models_ = std::move(models_before);
    finished_ = false;
    throw;
  }
}

nlohmann::json LiloEngine::snapshot() const {
  nlohmann::json experiments = nlohmann::json::array();
  for (const auto& r : data_) {
    experiments.push_back({{"arm_index", r.arm_index}, {"trial", r.trial}, {"x", vector_json(r.x)}, {"y", vector_json(r.y)}});
  }
  nlohmann::json fb = nlohmann::json::array();
  for (const auto& e : feedback_) fb.push_back({{"question", e.question}, {"answer", e.answer}});
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : trace_.trials) trials.push_back(t.to_json());
  return {{"version", 1},
          {"method", to_string(method_)},
          {"environment", env_->id()},
          {"config", config_.to_json()},
          {"started", started_},
          {"finished", finished_},
          {"trial", trial_},
          {"pending", pending_},
          {"experiments", experiments},
          {"feedback", fb},
          {"trials", trials}};
}

std::unique_ptr<LiloEngine> LiloEngine::restore(const nlohmann::json& state, env::EnvironmentPtr env,
                                                std::shared_ptr<Agent> agent) {
  if (state.value("version", 0) != 1) throw InputError("lilo: unsupported snapshot version");
  if (state.at("environment").get<std::string>() != env->id()) throw InputError("lilo: snapshot environment mismatch");
  auto engine = std::make_unique<LiloEngine>(std::move(env), std::move(agent), LoopConfig::from_json(state.at("config")),
                                             parse_method(state.at("method").get<std::string>()));
  engine->started_ = state.at("started").get<bool>();
  engine->finished_ = state.at("finished").get<bool>();
  engine->trial_ = state.at("trial").get<int>();
  engine->pending_ = state.at("pending").get<std::vector<std::string>>();
  for (const auto& r : state.at("experiments")) {
    engine->data_.push_back({r.at("arm_index").get<std::string>(), r.at("trial").get<int>(), json_vector(r.at("x")),
                             json_vector(r.at("y"))});
  }
  for (const auto& e : state.at("feedback")) {
    engine->feedback_.push_back({e.at("question").get<std::string>(), e.at("answer").get<std::string>()});
  }
  for (const auto& t : state.at("trials")) engine->trace_.trials.push_back(TrialRecord::from_json(t));

  for (auto it = engine->trace_.trials.rbegin(); it != engine->trace_.trials.rend(); ++it) {
    if (it->labeled_pairs.empty() && it->scalar_labels.empty()) continue;
    ExperimentDataset upto;
    for (const auto& r : engine->data_) {
      if (r.trial <= it->trial) upto.push_back(r);
    }
    engine->models_ = std::make_unique<ProxyModels>(refit_from_record(*engine->env_, upto, *it, engine->config_));
    break;
  }
  return engine;
}

Trace run_lilo(env::EnvironmentPtr env, std::shared_ptr<Agent> agent, DecisionMaker& dm, const LoopConfig& config,
               Method method) {
  LiloEngine engine(env, std::move(agent), config, method);
  engine.begin();
  std::vector<std::string> entry{env->seed_message()};
  if (engine.pending().size() > 1) {
    const std::vector<std::string> rest(engine.pending().begin() + 1, engine.pending().end());
    const auto more = dm.answer(*env, {}, rest, 0);
    entry.insert(entry.end(), more.begin(), more.end());
  }
  engine.submit(entry);
  while (!engine.finished()) {
    engine.submit(dm.answer(*env, engine.experiments(), engine.pending(), engine.trial()));
  }
  return engine.trace();
}

}  // namespace lilo::opt
