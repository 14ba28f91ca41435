#pragma once

#include "lilo/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lilo::opt {

struct ArmRecord {
  std::string arm_index;
  Vector x;
  Vector y;
  double utility = 0.0;  // ground truth, never shown to the optimizer
};

struct LabeledPair {
  std::string a;
  std::string b;
  /// 0 prefers a, 1 prefers b; one entry per retained vote.
  std::vector<int> votes;
};

struct ScalarLabel {
  std::string arm_index;
  std::vector<double> values;
};

/// Trial 0 holds the entry exchange only.
struct TrialRecord {
  int trial = 0;
  std::vector<ArmRecord> arms;
  std::vector<std::string> highlighted;
  std::vector<std::string> questions;
  std::vector<std::string> answers;
  std::vector<LabeledPair> labeled_pairs;
  std::vector<ScalarLabel> scalar_labels;
  nlohmann::json models = nlohmann::json::object();
  double max_utility = 0.0;
  std::optional<std::string> best_arm;
  std::optional<double> best_arm_utility;

  nlohmann::json to_json() const;
  static TrialRecord from_json(const nlohmann::json& j);
};

struct Trace {
  std::string method;
  std::string environment;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<TrialRecord> trials;

  /// Max ground-truth utility after each trial >= 1.
  std::vector<double> max_so_far() const;
  std::vector<double> best_point_utilities() const;

  std::string to_jsonl() const;
  static Trace from_jsonl(const std::string& text, std::string method = {}, std::string environment = {});
  void write(const std::filesystem::path& path) const;
  static Trace read(const std::filesystem::path& path);
};

/// Run manifest stored next to a trace.
nlohmann::json make_manifest(const Trace& trace);
std::string build_version();

nlohmann::json vector_json(const Vector& v);
Vector json_vector(const nlohmann::json& j);

}  // namespace lilo::opt
