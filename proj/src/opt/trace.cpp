#include "lilo/opt/trace.hpp"

#include "lilo/errors.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#ifndef LILO_BUILD_VERSION
#define LILO_BUILD_VERSION "unknown"
#endif

namespace lilo::opt {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

nlohmann::json TrialRecord::to_json() const {
  nlohmann::json j;
  j["trial"] = trial;
  j["arms"] = nlohmann::json::array();
  for (const auto& a : arms) {
    j["arms"].push_back({{"arm_index", a.arm_index}, {"x", vector_json(a.x)}, {"y", vector_json(a.y)}, {"utility", a.utility}});
  }
  j["highlighted"] = highlighted;
  j["questions"] = questions;
  j["answers"] = answers;
  j["labeled_pairs"] = nlohmann::json::array();
  for (const auto& p : labeled_pairs) j["labeled_pairs"].push_back({{"a", p.a}, {"b", p.b}, {"votes", p.votes}});
  j["scalar_labels"] = nlohmann::json::array();
  for (const auto& s : scalar_labels) j["scalar_labels"].push_back({{"arm_index", s.arm_index}, {"values", s.values}});
  j["models"] = models;
  j["max_utility"] = max_utility;
  j["best_arm"] = best_arm ? nlohmann::json(*best_arm) : nlohmann::json(nullptr);
  j["best_arm_utility"] = best_arm_utility ? nlohmann::json(*best_arm_utility) : nlohmann::json(nullptr);
  return j;
}

TrialRecord TrialRecord::from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.trial = j.at("trial").get<int>();
  for (const auto& a : j.at("arms")) {
    r.arms.push_back({a.at("arm_index").get<std::string>(), json_vector(a.at("x")), json_vector(a.at("y")),
                      a.at("utility").get<double>()});
  }
  r.highlighted = j.value("highlighted", std::vector<std::string>{});
  r.questions = j.value("questions", std::vector<std::string>{});
  r.answers = j.value("answers", std::vector<std::string>{});
  for (const auto& p : j.value("labeled_pairs", nlohmann::json::array())) {
    r.labeled_pairs.push_back({p.at("a").get<std::string>(), p.at("b").get<std::string>(), p.at("votes").get<std::vector<int>>()});
  }
  for (const auto& s : j.value("scalar_labels", nlohmann::json::array())) {
    r.scalar_labels.push_back({s.at("arm_index").get<std::string>(), s.at("values").get<std::vector<double>>()});
  }
  r.models = j.value("models", nlohmann::json::object());
  r.max_utility = j.at("max_utility").get<double>();
  if (j.contains("best_arm") && !j.at("best_arm").is_null()) r.best_arm = j.at("best_arm").get<std::string>();
  if (j.contains("best_arm_utility") && !j.at("best_arm_utility").is_null()) {
    r.best_arm_utility = j.at("best_arm_utility").get<double>();
  }
  return r;
}

std::vector<double> Trace::max_so_far() const {
  std::vector<double> out;
  for (const auto& t : trials) {
    if (t.trial >= 1) out.push_back(t.max_utility);
  }
  return out;
}

std::vector<double> Trace::best_point_utilities() const {
  std::vector<double> out;
  for (const auto& t : trials) {
    if (t.trial >= 1) out.push_back(t.best_arm_utility.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  return out;
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& t : trials) out += t.to_json().dump() + "\n";
  return out;
}

Trace Trace::from_jsonl(const std::string& text, std::string method, std::string environment) {
  Trace t;
  t.method = std::move(method);
  t.environment = std::move(environment);
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      t.trials.push_back(TrialRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw InputError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return t;
}

void Trace::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write trace " + path.string());
    out << to_jsonl();
  }
  std::filesystem::path manifest = path;
  manifest.replace_extension(".manifest.json");
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw InputError("cannot write manifest " + manifest.string());
  out << make_manifest(*this).dump(2) << "\n";
}

Trace Trace::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read trace " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  Trace t = from_jsonl(buf.str());
  std::filesystem::path manifest = path;
  manifest.replace_extension(".manifest.json");
  std::ifstream min(manifest);
  if (min) {
    const auto m = nlohmann::json::parse(min, nullptr, false);
    if (!m.is_discarded()) {
      t.method = m.value("method", "");
      t.environment = m.value("environment", "");
      t.seed = m.value("seed", std::uint64_t{0});
      t.config = m.value("config", nlohmann::json::object());
    }
  }
  return t;
}

std::string build_version() { return LILO_BUILD_VERSION; }

nlohmann::json make_manifest(const Trace& trace) {
  return {{"method", trace.method},
          {"environment", trace.environment},
          {"seed", trace.seed},
          {"config", trace.config},
          {"trials", static_cast<int>(trace.trials.size())},
          {"build", build_version()}};
}

}  // namespace lilo::opt
