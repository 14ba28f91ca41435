#pragma once

#include "lilo/env/environment.hpp"
#include "lilo/llm/bridge.hpp"
#include "lilo/types.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lilo::opt {

/// Optimizer-side language functions.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::vector<std::string> init_questions(const env::Environment& env, const FeedbackDataset& feedback, int n,
                                                  int trial) = 0;
  virtual std::vector<std::string> questions(const env::Environment& env, const ExperimentDataset& data,
                                             const FeedbackDataset& feedback,
                                             const std::optional<std::vector<int>>& highlighted, int n, int trial) = 0;
  virtual std::string summarize(const env::Environment& env, const ExperimentDataset& data,
                                const FeedbackDataset& feedback, int trial) = 0;
  virtual std::vector<llm::LabelVote> label_pairs(const env::Environment& env, const ExperimentDataset& data,
                                                  const FeedbackDataset& feedback, const std::string& summary,
                                                  const std::vector<IndexPair>& pairs, int trial) = 0;
  virtual llm::UtilityEstimates estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                                   const FeedbackDataset& feedback, const std::string& summary,
                                                   int trial) = 0;
  virtual Matrix prior_candidates(const env::Environment& env, const FeedbackDataset& feedback,
                                  const std::string& prior_text, int n, int trial) = 0;
  virtual Matrix candidates_2step(const env::Environment& env, const ExperimentDataset& data, const Vector& estimated,
                                  const FeedbackDataset& feedback, int n, int trial) = 0;
  virtual Matrix candidates_direct(const env::Environment& env, const ExperimentDataset& data,
                                   const FeedbackDataset& feedback, int n, int trial) = 0;
};

/// Answers the agent's questions.
class DecisionMaker {
 public:
  virtual ~DecisionMaker() = default;
  virtual std::vector<std::string> answer(const env::Environment& env, const ExperimentDataset& data,
                                          const std::vector<std::string>& questions, int trial) = 0;
};

class LlmAgent : public Agent {
 public:
  explicit LlmAgent(std::shared_ptr<llm::LanguageBridge> bridge) : bridge_(std::move(bridge)) {}

  std::vector<std::string> init_questions(const env::Environment& env, const FeedbackDataset& feedback, int n,
                                          int trial) override;
  std::vector<std::string> questions(const env::Environment& env, const ExperimentDataset& data,
                                     const FeedbackDataset& feedback,
                                     const std::optional<std::vector<int>>& highlighted, int n, int trial) override;
  std::string summarize(const env::Environment& env, const ExperimentDataset& data, const FeedbackDataset& feedback,
                        int trial) override;
  std::vector<llm::LabelVote> label_pairs(const env::Environment& env, const ExperimentDataset& data,
                                          const FeedbackDataset& feedback, const std::string& summary,
                                          const std::vector<IndexPair>& pairs, int trial) override;
  llm::UtilityEstimates estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                           const FeedbackDataset& feedback, const std::string& summary,
                                           int trial) override;
  Matrix prior_candidates(const env::Environment& env, const FeedbackDataset& feedback, const std::string& prior_text,
                          int n, int trial) override;
  Matrix candidates_2step(const env::Environment& env, const ExperimentDataset& data, const Vector& estimated,
                          const FeedbackDataset& feedback, int n, int trial) override;
  Matrix candidates_direct(const env::Environment& env, const ExperimentDataset& data,
                           const FeedbackDataset& feedback, int n, int trial) override;

 private:
  std::shared_ptr<llm::LanguageBridge> bridge_;
};

/// Labels and utilities straight from the ground truth; questions are
/// templated. Candidate generation needs a language model and throws.
class OracleAgent : public Agent {
 public:
  explicit OracleAgent(int votes = 5) : votes_(votes) {}

  std::vector<std::string> init_questions(const env::Environment& env, const FeedbackDataset& feedback, int n,
                                          int trial) override;
  std::vector<std::string> questions(const env::Environment& env, const ExperimentDataset& data,
                                     const FeedbackDataset& feedback,
                                     const std::optional<std::vector<int>>& highlighted, int n, int trial) override;
  std::string summarize(const env::Environment&, const ExperimentDataset&, const FeedbackDataset&, int) override {
    return "";
  }
  std::vector<llm::LabelVote> label_pairs(const env::Environment& env, const ExperimentDataset& data,
                                          const FeedbackDataset& feedback, const std::string& summary,
                                          const std::vector<IndexPair>& pairs, int trial) override;
  llm::UtilityEstimates estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                           const FeedbackDataset& feedback, const std::string& summary,
                                           int trial) override;
  Matrix prior_candidates(const env::Environment& env, const FeedbackDataset& feedback, const std::string& prior_text,
                          int n, int trial) override;
  Matrix candidates_2step(const env::Environment& env, const ExperimentDataset& data, const Vector& estimated,
                          const FeedbackDataset& feedback, int n, int trial) override;
  Matrix candidates_direct(const env::Environment& env, const ExperimentDataset& data,
                           const FeedbackDataset& feedback, int n, int trial) override;

 private:
  int votes_;
};

class LlmDm : public DecisionMaker {
 public:
  explicit LlmDm(std::shared_ptr<llm::LanguageBridge> bridge) : bridge_(std::move(bridge)) {}
  std::vector<std::string> answer(const env::Environment& env, const ExperimentDataset& data,
                                  const std::vector<std::string>& questions, int trial) override;

 private:
  std::shared_ptr<llm::LanguageBridge> bridge_;
};

/// Deterministic templated answers: ratings of the arms a question names,
/// otherwise a statement about the best arm seen so far.
class OracleDm : public DecisionMaker {
 public:
  std::vector<std::string> answer(const env::Environment& env, const ExperimentDataset& data,
                                  const std::vector<std::string>& questions, int trial) override;
};

}  // namespace lilo::opt
