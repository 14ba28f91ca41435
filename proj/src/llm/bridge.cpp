#include "lilo/llm/bridge.hpp"

#include "lilo/errors.hpp"
#include "lilo/llm/parsers.hpp"
#include "lilo/llm/prompts.hpp"

#include <spdlog/spdlog.h>

#include <atomic>
#include <chrono>
#include <exception>
#include <numeric>
#include <thread>

namespace lilo::llm {

namespace {

std::vector<std::string> arm_ids(const ExperimentDataset& data) {
  std::vector<std::string> out;
  for (const auto& r : data) out.push_back(r.arm_index);
  return out;
}

// Runs jobs [0, n) with up to `workers` threads; rethrows the first error by index.
void parallel_for(int n, int workers, const std::function<void(int)>& job) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          job(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void BridgeConfig::validate() const {
  std::vector<std::string> bad;
  if (retries < 0) bad.push_back("retries must be >= 0");
  if (n_samples < 1) bad.push_back("n_samples must be >= 1");
  if (max_failed_replicates < 0) bad.push_back("max_failed_replicates must be >= 0");
  for (double t : {temperature_questions, temperature_dm, temperature_label, temperature_scalar, temperature_summary,
                   temperature_candidates}) {
    if (!(t >= 0.0 && t <= 2.0)) {
      bad.push_back("temperatures must lie in [0, 2]");
      break;
    }
  }
  if (max_tokens < 1) bad.push_back("max_tokens must be >= 1");
  if (max_in_flight < 1) bad.push_back("max_in_flight must be >= 1");
  if (rate_per_minute < 0) bad.push_back("rate_per_minute must be >= 0");
  if (!bad.empty()) {
    std::string msg = "bridge config:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw ConfigError(msg);
  }
}

nlohmann::json BridgeConfig::to_json() const {
  return {{"retries", retries},
          {"n_samples", n_samples},
          {"max_failed_replicates", max_failed_replicates},
          {"temperature_questions", temperature_questions},
          {"temperature_dm", temperature_dm},
          {"temperature_label", temperature_label},
          {"temperature_scalar", temperature_scalar},
          {"temperature_summary", temperature_summary},
          {"temperature_candidates", temperature_candidates},
          {"max_tokens", max_tokens},
          {"max_in_flight", max_in_flight},
          {"rate_per_minute", rate_per_minute},
          {"seed", seed}};
}

BridgeConfig BridgeConfig::from_json(const nlohmann::json& j) {
  BridgeConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "retries") c.retries = value.get<int>();
    else if (key == "n_samples") c.n_samples = value.get<int>();
    else if (key == "max_failed_replicates") c.max_failed_replicates = value.get<int>();
    else if (key == "temperature_questions") c.temperature_questions = value.get<double>();
    else if (key == "temperature_dm") c.temperature_dm = value.get<double>();
    else if (key == "temperature_label") c.temperature_label = value.get<double>();
    else if (key == "temperature_scalar") c.temperature_scalar = value.get<double>();
    else if (key == "temperature_summary") c.temperature_summary = value.get<double>();
    else if (key == "temperature_candidates") c.temperature_candidates = value.get<double>();
    else if (key == "max_tokens") c.max_tokens = value.get<int>();
    else if (key == "max_in_flight") c.max_in_flight = value.get<int>();
    else if (key == "rate_per_minute") c.rate_per_minute = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw ConfigError("bridge config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

double UtilityEstimates::mean(const std::string& arm) const {
  const auto& v = samples.at(arm);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

LanguageBridge::LanguageBridge(BackendPtr backend, BridgeConfig config, std::shared_ptr<TranscriptLog> log)
    : backend_(std::move(backend)),
      config_(config),
      log_(log ? std::move(log) : std::make_shared<TranscriptLog>()),
      limiter_(config.rate_per_minute) {
  if (!backend_) throw ConfigError("language bridge: no backend configured");
  config_.validate();
}

int LanguageBridge::concurrency() const { return std::max(1, std::min(config_.max_in_flight, backend_->max_concurrency())); }

template <class T>
T LanguageBridge::call(const Call& c, const std::function<T(const std::string&)>& parse) {
  std::vector<std::string> transcripts;
  const std::string hash = hex64(fnv1a(c.prompt));
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    ChatRequest req;
    req.messages = {{"user", c.prompt}};
    req.temperature = c.temperature;
    req.max_tokens = config_.max_tokens;
    req.seed = fnv1a(std::to_string(config_.seed) + "/" + c.purpose + "/" + std::to_string(c.trial) + "/" +
                     std::to_string(c.replicate) + "/" + std::to_string(attempt));
    req.purpose = c.purpose;
    req.meta = c.meta;

    TranscriptRecord rec;
    rec.trial = c.trial;
    rec.purpose = c.purpose;
    rec.request_hash = hash;
    rec.request_id = hash + "-" + std::to_string(c.replicate) + "-" + std::to_string(attempt);
    rec.prompt = c.prompt;
    rec.replicate = c.replicate;
    rec.attempt = attempt;

    limiter_.acquire();
    const auto t0 = std::chrono::steady_clock::now();
    ChatResponse resp;
    try {
      resp = backend_->complete(req);
    } catch (const BackendError& e) {
      rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      rec.parse_status = "backend-error";
      rec.completion = e.what();
      log_->append(rec);
      throw BackendError(c.purpose + " (trial " + std::to_string(c.trial) + "): " + e.what());
    }
    rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rec.completion = resp.text;
    rec.prompt_tokens = resp.prompt_tokens;
    rec.completion_tokens = resp.completion_tokens;
    spdlog::debug("llm call {} purpose={} trial={} latency={:.1f}ms tokens={}/{}", rec.request_id, c.purpose, c.trial,
                  rec.latency_ms, resp.prompt_tokens, resp.completion_tokens);
    try {
      T value = parse(resp.text);
      rec.parse_status = "ok";
      log_->append(rec);
      return value;
    } catch (const ParseError& e) {
      rec.parse_status = "malformed";
      log_->append(rec);
      transcripts.push_back(resp.text);
      spdlog::warn("{} (trial {}): malformed completion on attempt {}: {}", c.purpose, c.trial, attempt + 1, e.what());
    }
  }
  throw ParseError(c.purpose + " (trial " + std::to_string(c.trial) + "): malformed output after " +
                       std::to_string(config_.retries + 1) + " attempts",
                   std::move(transcripts));
}

std::vector<std::string> LanguageBridge::get_init_questions(const env::Environment& env,
                                                            const FeedbackDataset& feedback, int n, int trial) {
  if (n < 1) throw InputError("get_init_questions: n must be >= 1");
  const std::string prompt = render_prompt(
      prompt_template("init_questions"),
      {{"y_names", name_list(env.outcome_names())}, {"human_feedback", render_feedback(feedback)},
       {"n_questions", std::to_string(n)}});
  return call<std::vector<std::string>>({"init_questions", trial, 0, prompt, config_.temperature_questions,
                                         {{"n_questions", n}}},
                                        [n](const std::string& t) { return parse_questions(t, n); });
}

std::vector<std::string> LanguageBridge::get_questions(const env::Environment& env, const ExperimentDataset& data,
                                                       const FeedbackDataset& feedback,
                                                       const std::optional<std::vector<int>>& highlighted, int n,
                                                       int trial) {
  if (n < 1) throw InputError("get_questions: n must be >= 1");
  PromptContext ctx{{"y_names", name_list(env.outcome_names())},
                    {"experiment_data", experiment_table(data, env.space(), env.outcome_names())},
                    {"human_feedback", render_feedback(feedback)},
                    {"n_questions", std::to_string(n)}};
  if (highlighted) {
    std::vector<std::string> ids;
    for (int i : *highlighted) {
      if (i < 0 || i >= static_cast<int>(data.size())) throw InputError("get_questions: highlighted index out of range");
      ids.push_back(data[static_cast<std::size_t>(i)].arm_index);
    }
    ctx["selected_outcome_indices"] = name_list(ids);
  }
  const std::string prompt = render_prompt(prompt_template(highlighted ? "questions" : "questions_open"), ctx);
  return call<std::vector<std::string>>({"questions", trial, 0, prompt, config_.temperature_questions,
                                         {{"n_questions", n}}},
                                        [n](const std::string& t) { return parse_questions(t, n); });
}

std::string LanguageBridge::summarize_feedback(const env::Environment& env, const ExperimentDataset& data,
                                               const FeedbackDataset& feedback, int trial) {
  const std::string prompt = render_prompt(prompt_template("summary"),
                                           {{"y_names", name_list(env.outcome_names())},
                                            {"experiment_data", experiment_table(data, env.space(), env.outcome_names())},
                                            {"human_feedback", render_feedback(feedback)}});
  const std::string key = std::to_string(trial) + "/" + hex64(fnv1a(prompt));
  {
    std::lock_guard lock(cache_mu_);
    if (auto it = summary_cache_.find(key); it != summary_cache_.end()) return it->second;
  }
  std::string summary;
  try {
    summary = call<std::string>({"summary", trial, 0, prompt, config_.temperature_summary, {}}, parse_summary);
  } catch (const ParseError& e) {
    spdlog::warn("summary (trial {}): falling back to an empty summary: {}", trial, e.what());
  }
  std::lock_guard lock(cache_mu_);
  summary_cache_[key] = summary;
  return summary;
}

namespace {

struct Vote {
  int answer = 0;
  std::string reasoning;
};

Vote parse_vote_with_reasoning(const std::string& text) {
  Vote v{parse_vote(text), ""};
  const auto j = parse_json_object(text);
  if (j.contains("reasoning") && j["reasoning"].is_string()) v.reasoning = j["reasoning"].get<std::string>();
  return v;
}

std::string summary_block(const std::string& summary) {
  return summary.empty() ? "" : "## Summary of the human feedback:\n" + summary;
}

}  // namespace

std::vector<LabelVote> LanguageBridge::get_pairwise_prefs(const env::Environment& env, const ExperimentDataset& data,
                                                          const FeedbackDataset& feedback, const std::string& summary,
                                                          const std::vector<IndexPair>& pairs, int trial) {
  const int m = static_cast<int>(data.size());
  for (const auto& p : pairs) {
    if (p.first < 0 || p.second < 0 || p.first >= m || p.second >= m || p.first == p.second) {
      throw InputError("get_pairwise_pref: pair indices out of range");
    }
  }
  const std::string table = experiment_table(data, env.space(), env.outcome_names());
  const std::string fb = render_feedback(feedback);
  const std::string sum = summary_block(summary);
  const int s = config_.n_samples;
  const int jobs = static_cast<int>(pairs.size()) * s;
  std::vector<std::optional<Vote>> results(static_cast<std::size_t>(jobs));
  parallel_for(jobs, concurrency(), [&](int job) {
    const auto& p = pairs[static_cast<std::size_t>(job / s)];
    const std::string prompt =
        render_prompt(prompt_template("pairwise"),
                      {{"y_names", name_list(env.outcome_names())},
                       {"experiment_data", table},
                       {"human_feedback", fb},
                       {"human_feedback_summary", sum},
                       {"pair_str", pair_table(data[p.first].y, data[p.second].y, env.outcome_names())}});
    try {
      results[static_cast<std::size_t>(job)] = call<Vote>(
          {"pairwise", trial, job % s, prompt, config_.temperature_label,
           {{"pair", {data[p.first].arm_index, data[p.second].arm_index}}}},
          parse_vote_with_reasoning);
    } catch (const ParseError&) {
    }
  });
  std::vector<LabelVote> out;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    LabelVote lv{pairs[k].first, pairs[k].second, {}, {}, 0, false};
    for (int r = 0; r < s; ++r) {
      const auto& v = results[k * static_cast<std::size_t>(s) + static_cast<std::size_t>(r)];
      if (v) {
        lv.votes.push_back(v->answer);
        lv.reasonings.push_back(v->reasoning);
      } else {
        ++lv.failed_replicates;
      }
    }
    if (lv.failed_replicates > config_.max_failed_replicates || lv.votes.empty()) {
      spdlog::warn("pairwise (trial {}): dropping pair ({}, {}) after {} failed replicates", trial,
                   data[pairs[k].first].arm_index, data[pairs[k].second].arm_index, lv.failed_replicates);
      lv.dropped = true;
      lv.votes.clear();
      lv.reasonings.clear();
    }
    out.push_back(std::move(lv));
  }
  return out;
}

LabelVote LanguageBridge::get_pairwise_pref(const env::Environment& env, const ExperimentDataset& data,
                                            const FeedbackDataset& feedback, const std::string& summary,
                                            IndexPair pair, int trial) {
  auto votes = get_pairwise_prefs(env, data, feedback, summary, {pair}, trial);
  if (votes[0].dropped) {
    throw ParseError("pairwise (trial " + std::to_string(trial) + "): " + std::to_string(votes[0].failed_replicates) +
                     " of " + std::to_string(config_.n_samples) + " replicates unparseable");
  }
  return votes[0];
}

UtilityEstimates LanguageBridge::estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                                    const FeedbackDataset& feedback, const std::string& summary,
                                                    int trial) {
  if (data.empty()) throw InputError("estimate_utilities: no experiments");
  const std::vector<std::string> arms = arm_ids(data);
  const std::string prompt = render_prompt(prompt_template("scalar"),
                                           {{"y_names", name_list(env.outcome_names())},
                                            {"experiment_data", experiment_table(data, env.space(), env.outcome_names())},
                                            {"human_feedback", render_feedback(feedback)},
                                            {"human_feedback_summary", summary_block(summary)},
                                            {"idx0", arms.front()},
                                            {"idx1", arms.size() > 1 ? arms[1] : arms.front()},
                                            {"idxn", arms.back()}});
  const int s = config_.n_samples;
  std::vector<std::optional<UtilityRecords>> results(static_cast<std::size_t>(s));
  parallel_for(s, concurrency(), [&](int r) {
    try {
      results[static_cast<std::size_t>(r)] = call<UtilityRecords>(
          {"scalar", trial, r, prompt, config_.temperature_scalar, {{"arms", arms}}},
          [&arms](const std::string& t) { return parse_utilities(t, arms); });
    } catch (const ParseError&) {
    }
  });
  UtilityEstimates out;
  int clamped = 0;
  for (const auto& r : results) {
    if (!r) continue;
    clamped += r->clamped;
    for (const auto& [arm, p] : r->values) out.samples[arm].push_back(p);
  }
  if (clamped > 0) spdlog::warn("scalar (trial {}): clamped {} p_accept values into [0, 1]", trial, clamped);
  for (const auto& arm : arms) {
    if (!out.samples.count(arm)) {
      throw ParseError("scalar (trial " + std::to_string(trial) + "): no estimate for arm " + arm);
    }
  }
  return out;
}

Matrix LanguageBridge::candidates(const env::Environment& env, const Call& c, int n) {
  const int d = env.input_dim();
  Call cc = c;
  cc.meta["n_candidates"] = n;
  cc.meta["dim"] = d;
  const CandidateMatrix parsed =
      call<CandidateMatrix>(cc, [n, d](const std::string& t) { return parse_candidates(t, n, d); });
  if (parsed.clamped > 0) spdlog::warn("{} (trial {}): clamped {} coordinates into [0, 1]", c.purpose, c.trial, parsed.clamped);
  return env.space().from_unit_rows(parsed.unit);
}

Matrix LanguageBridge::sample_init_candidates(const env::Environment& env, const FeedbackDataset& feedback,
                                              const std::string& prior_text, int n, int trial) {
  if (prior_text.empty()) throw InputError("sample_init_candidates: prior text is empty");
  if (n < 1) throw InputError("sample_init_candidates: n must be >= 1");
  const std::string prompt = render_prompt(prompt_template("prior_candidates"),
                                           {{"x_names", name_list(env.space().names())},
                                            {"y_names", name_list(env.outcome_names())},
                                            {"prior_knowledge", prior_text},
                                            {"human_feedback", render_feedback(feedback)},
                                            {"n_candidates", std::to_string(n)},
                                            {"n", std::to_string(n - 1)}});
  return candidates(env, {"prior_candidates", trial, 0, prompt, config_.temperature_candidates, {}}, n);
}

Matrix LanguageBridge::candidates_2step(const env::Environment& env, const ExperimentDataset& data,
                                        const Vector& estimated, const FeedbackDataset& feedback, int n, int trial) {
  if (data.empty()) throw InputError("candidates_2step: no experiments");
  if (estimated.size() != static_cast<Eigen::Index>(data.size())) {
    throw InputError("candidates_2step: one estimate per arm required");
  }
  Eigen::Index best = 0;
  estimated.maxCoeff(&best);
  TableColumns cols;
  cols.inputs = true;
  cols.extra_header = "estimated_utility";
  cols.extra.assign(estimated.data(), estimated.data() + estimated.size());
  const std::string prompt =
      render_prompt(prompt_template("candidates_2step"),
                    {{"x_names", name_list(env.space().names())},
                     {"y_names", name_list(env.outcome_names())},
                     {"experiment_data", experiment_table(data, env.space(), env.outcome_names(), cols)},
                     {"human_feedback", render_feedback(feedback)},
                     {"n_candidates", std::to_string(n)},
                     {"n", std::to_string(n - 1)},
                     {"x_star", number_list(env.space().to_unit(data[static_cast<std::size_t>(best)].x))},
                     {"u_star", format_number(estimated[best])}});
  return candidates(env, {"candidates_2step", trial, 0, prompt, config_.temperature_candidates, {}}, n);
}

Matrix LanguageBridge::candidates_direct(const env::Environment& env, const ExperimentDataset& data,
                                         const FeedbackDataset& feedback, int n, int trial) {
  TableColumns cols;
  cols.inputs = true;
  const std::string prompt =
      render_prompt(prompt_template("candidates_direct"),
                    {{"x_names", name_list(env.space().names())},
                     {"y_names", name_list(env.outcome_names())},
                     {"experiment_data", experiment_table(data, env.space(), env.outcome_names(), cols)},
                     {"human_feedback", render_feedback(feedback)},
                     {"n_candidates", std::to_string(n)},
                     {"n", std::to_string(n - 1)}});
  return candidates(env, {"candidates_direct", trial, 0, prompt, config_.temperature_candidates, {}}, n);
}

std::vector<std::string> LanguageBridge::simulate_dm(const env::Environment& env, const ExperimentDataset& data,
                                                     const std::vector<std::string>& questions, int trial) {
  const int n = static_cast<int>(questions.size());
  if (n == 0) return {};
  TableColumns cols;
  cols.extra_header = "utility";
  for (const auto& r : data) cols.extra.push_back(env.utility(r.y));
  const std::string prompt =
      render_prompt(prompt_template("dm_answers"),
                    {{"y_names", name_list(env.outcome_names())},
                     {"utility_func_desc", env.utility_description()},
                     {"outcomes_markdown", data.empty() ? "(none yet)"
                                                        : experiment_table(data, env.space(), env.outcome_names(), cols)},
                     {"questions_str", render_questions(questions)},
                     {"n_questions", std::to_string(n)},
                     {"utility_constraints", env.utility_constraints()}});
  std::vector<std::string> answers;
  try {
    answers = call<std::vector<std::string>>(
        {"dm_answers", trial, 0, prompt, config_.temperature_dm, {{"n_questions", n}}},
        [n](const std::string& t) { return parse_questions(t, n, true); });
  } catch (const ParseError& e) {
    spdlog::warn("dm_answers (trial {}): answering 'no comment' to all questions: {}", trial, e.what());
    answers.assign(static_cast<std::size_t>(n), "");
  }
  for (auto& a : answers) {
    if (a.empty()) a = kNoComment;
  }
  return answers;
}

std::string prior_point_message(const Vector& unit_point) {
  return render_prompt(prompt_template("prior_point"), {{"promising_point", number_list(unit_point)}});
}

std::string prior_area_message(const Vector& unit_lower, const Vector& unit_upper) {
  std::string bounds = "[";
  for (Eigen::Index i = 0; i < unit_lower.size(); ++i) {
    bounds += (i ? ", [" : "[") + format_number(unit_lower[i]) + ", " + format_number(unit_upper[i]) + "]";
  }
  return render_prompt(prompt_template("prior_area"), {{"bounds", bounds + "]"}});
}

}  // namespace lilo::llm
