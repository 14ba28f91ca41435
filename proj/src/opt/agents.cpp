#include "lilo/opt/agents.hpp"

#include "lilo/errors.hpp"
#include "lilo/llm/prompts.hpp"

#include <regex>

namespace lilo::opt {

std::vector<std::string> LlmAgent::init_questions(const env::Environment& env, const FeedbackDataset& feedback, int n,
                                                  int trial) {
  return bridge_->get_init_questions(env, feedback, n, trial);
}

std::vector<std::string> LlmAgent::questions(const env::Environment& env, const ExperimentDataset& data,
                                             const FeedbackDataset& feedback,
                                             const std::optional<std::vector<int>>& highlighted, int n, int trial) {
  return bridge_->get_questions(env, data, feedback, highlighted, n, trial);
}

std::string LlmAgent::summarize(const env::Environment& env, const ExperimentDataset& data,
                                const FeedbackDataset& feedback, int trial) {
  return bridge_->summarize_feedback(env, data, feedback, trial);
}

std::vector<llm::LabelVote> LlmAgent::label_pairs(const env::Environment& env, const ExperimentDataset& data,
                                                  const FeedbackDataset& feedback, const std::string& summary,
                                                  const std::vector<IndexPair>& pairs, int trial) {
  return bridge_->get_pairwise_prefs(env, data, feedback, summary, pairs, trial);
}

llm::UtilityEstimates LlmAgent::estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                                   const FeedbackDataset& feedback, const std::string& summary,
                                                   int trial) {
  return bridge_->estimate_utilities(env, data, feedback, summary, trial);
}

Matrix LlmAgent::prior_candidates(const env::Environment& env, const FeedbackDataset& feedback,
                                  const std::string& prior_text, int n, int trial) {
  return bridge_->sample_init_candidates(env, feedback, prior_text, n, trial);
}

Matrix LlmAgent::candidates_2step(const env::Environment& env, const ExperimentDataset& data, const Vector& estimated,
                                  const FeedbackDataset& feedback, int n, int trial) {
  return bridge_->candidates_2step(env, data, estimated, feedback, n, trial);
}

Matrix LlmAgent::candidates_direct(const env::Environment& env, const ExperimentDataset& data,
                                   const FeedbackDataset& feedback, int n, int trial) {
  return bridge_->candidates_direct(env, data, feedback, n, trial);
}

namespace {

const char* kGeneralQuestions[] = {
    "Which outcome matters most to you?",
    "How do you trade off a shortfall in one outcome against gains in the others?",
    "What does an acceptable outcome look like to you?",
};

}  // namespace

std::vector<std::string> OracleAgent::init_questions(const env::Environment&, const FeedbackDataset&, int n, int) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.emplace_back(kGeneralQuestions[i % 3]);
  return out;
}

std::vector<std::string> OracleAgent::questions(const env::Environment&, const ExperimentDataset& data,
                                                const FeedbackDataset&,
                                                const std::optional<std::vector<int>>& highlighted, int n, int) {
  std::vector<std::string> out;
  std::vector<int> idx = highlighted.value_or(std::vector<int>{});
  for (int i = 0; i < n; ++i) {
    if (2 * i + 1 < static_cast<int>(idx.size())) {
      out.push_back("Do you prefer arm_index " + data[idx[2 * i]].arm_index + " or arm_index " +
                    data[idx[2 * i + 1]].arm_index + "?");
    } else if (i < static_cast<int>(data.size())) {
      out.push_back("How satisfied are you with arm_index " + data[data.size() - 1 - i].arm_index + "?");
    } else {
      out.emplace_back(kGeneralQuestions[i % 3]);
    }
  }
  return out;
}

std::vector<llm::LabelVote> OracleAgent::label_pairs(const env::Environment& env, const ExperimentDataset& data,
                                                     const FeedbackDataset&, const std::string&,
                                                     const std::vector<IndexPair>& pairs, int) {
  std::vector<llm::LabelVote> out;
  for (const auto& p : pairs) {
    const int label = env::oracle_pairwise(env, data[p.first].y, data[p.second].y);
    llm::LabelVote v{p.first, p.second, std::vector<int>(static_cast<std::size_t>(votes_), label), {}, 0, false};
    v.reasonings.assign(static_cast<std::size_t>(votes_), "oracle");
    out.push_back(std::move(v));
  }
  return out;
}

llm::UtilityEstimates OracleAgent::estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                                      const FeedbackDataset&, const std::string&, int) {
  llm::UtilityEstimates out;
  for (const auto& r : data) out.samples[r.arm_index] = {env.utility(r.y)};
  return out;
}

Matrix OracleAgent::prior_candidates(const env::Environment&, const FeedbackDataset&, const std::string&, int, int) {
  throw ConfigError("oracle agent: prior-informed candidates need a language backend");
}

Matrix OracleAgent::candidates_2step(const env::Environment&, const ExperimentDataset&, const Vector&,
                                     const FeedbackDataset&, int, int) {
  throw ConfigError("oracle agent: 2-step candidates need a language backend");
}

Matrix OracleAgent::candidates_direct(const env::Environment&, const ExperimentDataset&, const FeedbackDataset&, int,
                                      int) {
  throw ConfigError("oracle agent: direct candidates need a language backend");
}

std::vector<std::string> LlmDm::answer(const env::Environment& env, const ExperimentDataset& data,
                                       const std::vector<std::string>& questions, int trial) {
  return bridge_->simulate_dm(env, data, questions, trial);
}

std::vector<std::string> OracleDm::answer(const env::Environment& env, const ExperimentDataset& data,
                                          const std::vector<std::string>& questions, int) {
  static const std::regex arm_re(R"((\d+_\d+))");
  std::vector<std::string> out;
  for (const auto& q : questions) {
    std::vector<std::string> parts;
    for (auto it = std::sregex_iterator(q.begin(), q.end(), arm_re); it != std::sregex_iterator(); ++it) {
      const std::string arm = (*it)[1];
      for (const auto& r : data) {
        if (r.arm_index == arm) {
          parts.push_back("my satisfaction with arm_index " + arm + " is " + llm::format_number(env.utility(r.y)) +
                          " out of 1");
          break;
        }
      }
    }
    if (!parts.empty()) {
      std::string s = "Roughly, ";
      for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "; " : "") + parts[i];
      out.push_back(s + ".");
      continue;
    }
    if (data.empty()) {
      out.push_back(env.seed_message());
      continue;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < data.size(); ++i) {
      if (env.utility(data[i].y) > env.utility(data[best].y)) best = i;
    }
    out.push_back("So far I like arm_index " + data[best].arm_index + " best. " + env.seed_message());
  }
  return out;
}

}  // namespace lilo::opt
