#pragma once

#include "lilo/env/environment.hpp"
#include "lilo/llm/backend.hpp"
#include "lilo/llm/transcript.hpp"
#include "lilo/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lilo::llm {

struct BridgeConfig {
  int retries = 2;
  int n_samples = 5;
  /// A pair with more failed replicates than this is dropped.
  int max_failed_replicates = 2;
  double temperature_questions = 0.7;
  double temperature_dm = 0.7;
  double temperature_label = 0.2;
  double temperature_scalar = 0.2;
  double temperature_summary = 0.2;
  double temperature_candidates = 0.7;
  int max_tokens = 4096;
  int max_in_flight = 4;
  int rate_per_minute = 0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static BridgeConfig from_json(const nlohmann::json& j);
};

/// Replicate votes on one outcome pair: 0 means option_0 (`first`) won.
struct LabelVote {
  int first = 0;
  int second = 0;
  std::vector<int> votes;
  std::vector<std::string> reasonings;
  int failed_replicates = 0;
  bool dropped = false;
};

/// Replicate p_accept values per arm.
struct UtilityEstimates {
  std::map<std::string, std::vector<double>> samples;
  double mean(const std::string& arm) const;
};

/// The language-model side of the loop: prompt rendering, calls with
/// retries, parsing and transcript logging.
class LanguageBridge {
 public:
  LanguageBridge(BackendPtr backend, BridgeConfig config = {}, std::shared_ptr<TranscriptLog> log = nullptr);

  const BridgeConfig& config() const { return config_; }
  TranscriptLog& transcript() { return *log_; }

  std::vector<std::string> get_init_questions(const env::Environment& env, const FeedbackDataset& feedback, int n,
                                              int trial);
  /// Without `highlighted`, the highlight sentence is left out of the prompt.
  std::vector<std::string> get_questions(const env::Environment& env, const ExperimentDataset& data,
                                         const FeedbackDataset& feedback,
                                         const std::optional<std::vector<int>>& highlighted, int n, int trial);
  /// Empty on failure after retries. Cached per trial and context.
  std::string summarize_feedback(const env::Environment& env, const ExperimentDataset& data,
                                 const FeedbackDataset& feedback, int trial);
  LabelVote get_pairwise_pref(const env::Environment& env, const ExperimentDataset& data,
                              const FeedbackDataset& feedback, const std::string& summary, IndexPair pair, int trial);
  /// One LabelVote per pair, same order; over-budget failures are marked dropped.
  std::vector<LabelVote> get_pairwise_prefs(const env::Environment& env, const ExperimentDataset& data,
                                            const FeedbackDataset& feedback, const std::string& summary,
                                            const std::vector<IndexPair>& pairs, int trial);
  UtilityEstimates estimate_utilities(const env::Environment& env, const ExperimentDataset& data,
                                      const FeedbackDataset& feedback, const std::string& summary, int trial);
  /// n points inside the environment box.
  Matrix sample_init_candidates(const env::Environment& env, const FeedbackDataset& feedback,
                                const std::string& prior_text, int n, int trial);
  Matrix candidates_2step(const env::Environment& env, const ExperimentDataset& data, const Vector& estimated,
                          const FeedbackDataset& feedback, int n, int trial);
  Matrix candidates_direct(const env::Environment& env, const ExperimentDataset& data,
                           const FeedbackDataset& feedback, int n, int trial);
  /// One answer per question; "no comment" where nothing usable came back.
  std::vector<std::string> simulate_dm(const env::Environment& env, const ExperimentDataset& data,
                                       const std::vector<std::string>& questions, int trial);

 private:
  struct Call {
    std::string purpose;
    int trial = 0;
    int replicate = 0;
    std::string prompt;
    double temperature = 0.7;
    nlohmann::json meta = nlohmann::json::object();
  };

  template <class T>
  T call(const Call& c, const std::function<T(const std::string&)>& parse);
  int concurrency() const;
  Matrix candidates(const env::Environment& env, const Call& c, int n);

  BackendPtr backend_;
  BridgeConfig config_;
  std::shared_ptr<TranscriptLog> log_;
  RateLimiter limiter_;
  std::mutex cache_mu_;
  std::map<std::string, std::string> summary_cache_;
};

inline constexpr const char* kNoComment = "no comment";

/// Example prior message for DTLZ2 point knowledge.
std::string prior_point_message(const Vector& unit_point);
/// Example prior message for DTLZ2 area knowledge.
std::string prior_area_message(const Vector& unit_lower, const Vector& unit_upper);

}  // namespace lilo::llm
