#pragma once

#include "lilo/env/environment.hpp"
#include "lilo/errors.hpp"
#include "lilo/llm/backend.hpp"
#include "lilo/llm/bridge.hpp"
#include "lilo/llm/parsers.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace lilo::fixtures {

struct CaseResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline nlohmann::json load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open fixture file " + path);
  return nlohmann::json::parse(in);
}

/// Two inputs on the unit square, outcomes equal to inputs.
inline env::EnvironmentPtr square_environment() {
  env::UtilitySpec u;
  u.kind = env::UtilityKind::L1;
  u.y_opt = Vector::Ones(2);
  u.l1_normalizer = 2.0;
  return std::make_shared<env::Environment>(
      "fixture-square", SearchSpace::unit_cube(2), std::vector<std::string>{"y_1", "y_2"},
      [](const Vector& x) { return x; }, u, "Both outcomes should be high.",
      env::OutcomeBounds{Vector::Zero(2), Vector::Ones(2)}, "higher is better", "none");
}

inline ExperimentDataset square_data() {
  ExperimentDataset d;
  d.push_back({"1_0", 1, Vector::Constant(2, 0.2), Vector::Constant(2, 0.2)});
  d.push_back({"1_1", 1, Vector::Constant(2, 0.7), Vector::Constant(2, 0.7)});
  return d;
}

inline bool close(const nlohmann::json& got, const nlohmann::json& want) {
  if (want.is_number() && got.is_number()) return std::abs(got.get<double>() - want.get<double>()) <= 1e-12;
  if (want.is_array() && got.is_array()) {
    if (want.size() != got.size()) return false;
    for (std::size_t i = 0; i < want.size(); ++i) {
      if (!close(got[i], want[i])) return false;
    }
    return true;
  }
  if (want.is_object() && got.is_object()) {
    if (want.size() != got.size()) return false;
    for (const auto& [k, v] : want.items()) {
      if (!got.contains(k) || !close(got[k], v)) return false;
    }
    return true;
  }
  return got == want;
}

inline nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

inline nlohmann::json parse_direct(const nlohmann::json& c) {
  const std::string parser = c.at("parser");
  const std::string text = c.at("text");
  if (parser == "questions") return llm::parse_questions(text, c.at("n").get<int>());
  if (parser == "vote") return llm::parse_vote(text);
  if (parser == "utilities") return llm::parse_utilities(text, {"1_0", "1_1"}).values;
  if (parser == "summary") return llm::parse_summary(text);
  if (parser == "candidates") return matrix_json(llm::parse_candidates(text, c.at("n"), c.at("d")).unit);
  throw InputError("unknown parser kind " + parser);
}

inline const char* purpose_of(const std::string& parser) {
  if (parser == "questions") return "init_questions";
  if (parser == "vote") return "pairwise";
  if (parser == "utilities") return "scalar";
  if (parser == "summary") return "summary";
  return "candidates_direct";
}

/// Runs the scripted attempts through the bridge with a retry budget of 2.
inline nlohmann::json parse_with_retries(const nlohmann::json& c, int& calls) {
  const std::string parser = c.at("parser");
  auto backend = std::make_shared<llm::ScriptedBackend>(
      std::map<std::string, std::vector<std::string>>{{purpose_of(parser), c.at("attempts")}});
  llm::BridgeConfig cfg;
  cfg.retries = 2;
  cfg.n_samples = 1;
  cfg.max_failed_replicates = 0;
  llm::LanguageBridge bridge(backend, cfg);
  const auto env = square_environment();
  const auto data = square_data();
  nlohmann::json out;
  try {
    if (parser == "questions") out = bridge.get_init_questions(*env, {}, c.at("n"), 1);
    else if (parser == "vote") out = bridge.get_pairwise_pref(*env, data, {}, "", {0, 1}, 1).votes.at(0);
    else if (parser == "utilities") {
      const auto est = bridge.estimate_utilities(*env, data, {}, "", 1);
      for (const auto& [arm, v] : est.samples) out[arm] = est.mean(arm);
    } else if (parser == "summary") out = bridge.summarize_feedback(*env, data, {}, 1);
    else out = matrix_json(bridge.candidates_direct(*env, data, {}, c.at("n"), 1));
  } catch (...) {
    calls = backend->calls();
    throw;
  }
  calls = backend->calls();
  return out;
}

inline CaseResult run_case(const nlohmann::json& c) {
  CaseResult r;
  r.name = c.at("name");
  const bool want_error = c.value("error", false);
  const bool scripted = c.contains("attempts");
  int calls = 0;
  try {
    const nlohmann::json got = scripted ? parse_with_retries(c, calls) : parse_direct(c);
    if (want_error) {
      r.detail = "expected an error, parsed " + got.dump();
      return r;
    }
    r.passed = close(got, c.at("expect"));
    if (!r.passed) r.detail = "got " + got.dump() + ", want " + c.at("expect").dump();
  } catch (const ParseError& e) {
    r.passed = want_error;
    if (!r.passed) r.detail = std::string("unexpected parse error: ") + e.what();
  } catch (const std::exception& e) {
    r.detail = std::string("unexpected error: ") + e.what();
    return r;
  }
  if (r.passed && scripted) {
    const std::size_t want_calls = c.at("attempts").size();
    if (static_cast<std::size_t>(calls) != want_calls) {
      r.passed = false;
      r.detail = "backend called " + std::to_string(calls) + " times, want " + std::to_string(want_calls);
    }
  }
  return r;
}

inline std::vector<CaseResult> run_all(const nlohmann::json& suite) {
  std::vector<CaseResult> out;
  for (const auto& c : suite.at("cases")) out.push_back(run_case(c));
  return out;
}

}  // namespace lilo::fixtures
