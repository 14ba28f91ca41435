#pragma once

#include "lilo/opt/agents.hpp"
#include "lilo/opt/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace lilo::service {

enum class Phase { AwaitingAnswers, RunningTrial, Idle, Finished };

std::string to_string(Phase phase);
Phase parse_phase(const std::string& text);

/// Builds the optimizer-side agent for a session. `session_dir` is where the
/// session may keep its own files (transcripts).
using AgentFactory =
    std::function<std::shared_ptr<opt::Agent>(const opt::LoopConfig& config, const std::filesystem::path& session_dir)>;

struct ServiceOptions {
  std::filesystem::path store_dir = "sessions";
  AgentFactory agent_factory;
};

/// Interactive sessions over the LILO engine. Answers are processed by a
/// background job per session; reads return a cached view and never wait
/// for a job.
class SessionManager {
 public:
  explicit SessionManager(ServiceOptions options);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// {"environment": id, "method"?: "lilo" | "lilo-scalar" | "llm-2step" | "llm-direct", "config"?: LoopConfig}
  nlohmann::json create(const nlohmann::json& request);
  nlohmann::json state(const std::string& id) const;
  /// Starts the trial job; with `wait`, blocks until it ends.
  nlohmann::json submit(const std::string& id, const std::vector<std::string>& answers, bool wait = false);
  /// Re-runs the last failed submission with the same answers.
  nlohmann::json retry(const std::string& id, bool wait = false);
  nlohmann::json job(const std::string& id) const;
  std::vector<std::string> list() const;
  /// Blocks until the session has no running job.
  void wait(const std::string& id) const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  void launch(const std::shared_ptr<Session>& s, std::vector<std::string> answers);
  void load_existing();

  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace lilo::service
