#include "lilo/llm/backend.hpp"

#include "lilo/errors.hpp"
#include "lilo/llm/transcript.hpp"
#include "lilo/types.hpp"

#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

namespace lilo::llm {

const std::string& ChatRequest::prompt() const {
  static const std::string empty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return empty;
}

ScriptedBackend::ScriptedBackend(std::map<std::string, std::vector<std::string>> script, bool cycle)
    : script_(std::move(script)), cycle_(cycle) {}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const nlohmann::json& j, bool cycle) {
  if (!j.is_object()) throw ConfigError("scripted backend: script must be an object of purpose -> completions");
  std::map<std::string, std::vector<std::string>> script;
  for (const auto& [purpose, list] : j.items()) {
    if (!list.is_array()) throw ConfigError("scripted backend: '" + purpose + "' must map to a list");
    for (const auto& s : list) script[purpose].push_back(s.get<std::string>());
  }
  return std::make_shared<ScriptedBackend>(std::move(script), cycle);
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  std::string key = request.purpose;
  if (!script_.count(key)) key = "*";
  auto it = script_.find(key);
  if (it == script_.end() || it->second.empty()) {
    throw BackendError("scripted backend: no completions for purpose '" + request.purpose + "'");
  }
  std::size_t& pos = cursor_[key];
  if (pos >= it->second.size()) {
    if (!cycle_) throw BackendError("scripted backend: script for '" + key + "' exhausted");
    pos = 0;
  }
  return {it->second[pos++], 0, 0};
}

int ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

namespace {

std::uint64_t hash_of(const ChatRequest& r, const std::string& salt) {
  return fnv1a(r.prompt() + "\x1f" + salt + "\x1f" + std::to_string(r.seed.value_or(0)));
}

std::string fenced(const nlohmann::json& j) { return "```json\n" + j.dump(4) + "\n```"; }

const char* kSyntheticQuestions[] = {
    "Which of the outcome metrics matters most to you, and why?",
    "How would you rank the best two arms you have seen so far?",
    "Is a shortfall in one outcome acceptable if the others are excellent?",
    "On a scale from 1 to 5, how satisfied are you with the most recent arm?",
    "What would you change first about the current best outcome?",
};

const char* kSyntheticAnswers[] = {
    "I care most about the first outcome, but I do not want the others to fall too low.",
    "The more recent arms look better to me; I would like to keep moving in that direction.",
    "A small shortfall is acceptable as long as nothing is badly off.",
    "I am moderately satisfied; there is still room for improvement.",
    "I would prefer a more balanced outcome across all metrics.",
};

}  // namespace

ChatResponse SyntheticBackend::complete(const ChatRequest& request) {
  const auto& meta = request.meta;
  const std::string& purpose = request.purpose;
  if (purpose == "init_questions" || purpose == "questions" || purpose == "dm_answers") {
    const int n = meta.value("n_questions", 1);
    const bool answers = purpose == "dm_answers";
    nlohmann::json out = nlohmann::json::object();
    for (int i = 1; i <= n; ++i) {
      const std::size_t k = hash_of(request, std::to_string(i)) % 5;
      out["q" + std::to_string(i)] = answers ? kSyntheticAnswers[k] : kSyntheticQuestions[k];
    }
    return {fenced(out), 0, 0};
  }
  if (purpose == "pairwise") {
    const int answer = static_cast<int>(hash_of(request, "answer") % 2);
    return {fenced({{"reasoning", "Weighing both options against the stated goals."}, {"answer", answer}}), 0, 0};
  }
  if (purpose == "scalar") {
    std::string body = "```jsonl\n";
    for (const auto& arm : meta.value("arms", nlohmann::json::array())) {
      const double p = static_cast<double>(hash_of(request, arm.get<std::string>()) % 1001) / 1000.0;
      body += nlohmann::json{{"arm_index", arm}, {"reasoning", "Estimated from the feedback."}, {"p_accept", p}}.dump() +
              "\n";
    }
    return {body + "```", 0, 0};
  }
  if (purpose == "summary") {
    return {fenced({{"summary", "The DM wants all outcomes high and balanced."}}), 0, 0};
  }
  if (purpose == "prior_candidates" || purpose == "candidates_2step" || purpose == "candidates_direct") {
    const int n = meta.value("n_candidates", 1);
    const int d = meta.value("dim", 1);
    nlohmann::json out = nlohmann::json::object();
    for (int i = 0; i < n; ++i) {
      std::vector<double> x;
      for (int j = 0; j < d; ++j) {
        x.push_back(static_cast<double>(hash_of(request, std::to_string(i) + "," + std::to_string(j)) % 10001) /
                    10000.0);
      }
      out[std::to_string(i)] = x;
    }
    return {fenced(out), 0, 0};
  }
  throw BackendError("synthetic backend: unknown purpose '" + purpose + "'");
}

HttpChatConfig HttpChatConfig::from_json(const nlohmann::json& j) {
  HttpChatConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.path = j.value("path", c.path);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.auth_header = j.value("auth_header", c.auth_header);
  c.auth_prefix = j.value("auth_prefix", c.auth_prefix);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  if (c.base_url.empty()) {
    if (const char* v = std::getenv("LILO_CHAT_URL")) c.base_url = v;
  }
  if (c.model.empty()) {
    if (const char* v = std::getenv("LILO_CHAT_MODEL")) c.model = v;
  }
  return c;
}

void HttpChatConfig::validate() const {
  if (base_url.empty()) throw ConfigError("http backend: no endpoint configured (base_url or LILO_CHAT_URL)");
  if (model.empty()) throw ConfigError("http backend: no model configured (model or LILO_CHAT_MODEL)");
  if (timeout_seconds < 1) throw ConfigError("http backend: timeout_seconds must be >= 1");
  if (max_concurrency < 1) throw ConfigError("http backend: max_concurrency must be >= 1");
}

HttpChatBackend::HttpChatBackend(HttpChatConfig config) : config_(std::move(config)) { config_.validate(); }

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = config_.model;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (request.seed) body["seed"] = *request.seed;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str())) {
    headers.emplace(config_.auth_header, config_.auth_prefix + key);
  }
  auto res = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) throw BackendError("http backend: request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BackendError("http backend: status " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    ChatResponse out;
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      out.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      out.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("http backend: unexpected response body: ") + e.what());
  }
}

void RateLimiter::acquire() {
  if (per_minute_ <= 0) return;
  using clock = std::chrono::steady_clock;
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = clock::now();
    while (!starts_.empty() && now - starts_.front() >= std::chrono::minutes(1)) starts_.pop_front();
    if (static_cast<int>(starts_.size()) < per_minute_) {
      starts_.push_back(now);
      return;
    }
    const auto wake = starts_.front() + std::chrono::minutes(1);
    lock.unlock();
    std::this_thread::sleep_until(wake);
    lock.lock();
  }
}

BackendPtr make_backend(const nlohmann::json& j) {
  const std::string kind = j.value("kind", "");
  if (kind == "synthetic") return std::make_shared<SyntheticBackend>();
  if (kind == "scripted") return ScriptedBackend::from_json(j.value("script", nlohmann::json::object()), j.value("cycle", false));
  if (kind == "http") return std::make_shared<HttpChatBackend>(HttpChatConfig::from_json(j));
  throw ConfigError("unknown backend kind '" + kind + "' (expected scripted, synthetic or http)");
}

BackendPtr backend_from_spec(const nlohmann::json& spec) {
  if (!spec.is_string()) return make_backend(spec);
  const std::string text = spec.get<std::string>();
  if (text == "synthetic") return std::make_shared<SyntheticBackend>();
  if (text.rfind("scripted:", 0) != 0) throw ConfigError("unknown backend '" + text + "'");
  const std::filesystem::path path = text.substr(9);
  if (path.extension() == ".jsonl") return std::make_shared<ScriptedBackend>(replay_script(TranscriptLog::read(path)));
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scripted backend file " + path.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("scripted backend file " + path.string() + " is not valid JSON");
  return ScriptedBackend::from_json(j);
}

}  // namespace lilo::llm
