#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lilo::llm {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.7;
  int max_tokens = 4096;
  std::optional<std::uint64_t> seed;
  /// Purpose tag and structured hints (counts, arm ids). Never sent over the wire.
  std::string purpose;
  nlohmann::json meta = nlohmann::json::object();

  /// Content of the last user message.
  const std::string& prompt() const;
};

struct ChatResponse {
  std::string text;
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

/// One text completion per request.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  /// Calls this backend tolerates at once. Scripted backends return 1 so
  /// their responses are consumed in a fixed order.
  virtual int max_concurrency() const { return 1; }
  virtual std::string name() const = 0;
};

using BackendPtr = std::shared_ptr<ChatBackend>;

/// Canned completions consumed in order, per purpose. A purpose with no
/// script falls back to the "*" list. Lists cycle when `cycle` is set,
/// otherwise running out throws BackendError.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::map<std::string, std::vector<std::string>> script, bool cycle = false);
  /// {"purpose": ["completion", ...], ...}
  static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& j, bool cycle = false);

  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "scripted"; }
  int calls() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::string>> script_;
  std::map<std::string, std::size_t> cursor_;
  bool cycle_;
  int calls_ = 0;
};

class FunctionBackend : public ChatBackend {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionBackend(Fn fn, int concurrency = 1) : fn_(std::move(fn)), concurrency_(concurrency) {}
  ChatResponse complete(const ChatRequest& request) override { return {fn_(request), 0, 0}; }
  int max_concurrency() const override { return concurrency_; }
  std::string name() const override { return "function"; }

 private:
  Fn fn_;
  int concurrency_;
};

/// Offline stand-in that answers every purpose with well-formed output.
/// Content is a pure function of the prompt, so runs are reproducible.
class SyntheticBackend : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return "synthetic"; }
};

struct HttpChatConfig {
  std::string base_url;  // "https://host:port"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "LILO_API_KEY";
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  int timeout_seconds = 120;
  int max_concurrency = 4;

  /// Fields absent from `j` keep their defaults; LILO_CHAT_URL and
  /// LILO_CHAT_MODEL fill an empty base_url / model.
  static HttpChatConfig from_json(const nlohmann::json& j);
  void validate() const;
};

/// OpenAI-style chat-completions client.
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpChatConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  int max_concurrency() const override { return config_.max_concurrency; }
  std::string name() const override { return "http"; }

 private:
  HttpChatConfig config_;
};

/// Blocks callers so no more than `per_minute` calls start in any
/// 60-second window. Zero disables the cap.
class RateLimiter {
 public:
  explicit RateLimiter(int per_minute) : per_minute_(per_minute) {}
  void acquire();

 private:
  int per_minute_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> starts_;
};

/// Builds a backend from {"kind": "scripted"|"synthetic"|"http", ...}.
BackendPtr make_backend(const nlohmann::json& j);

/// Like make_backend, but also accepts the strings "synthetic" and
/// "scripted:<path>". A .jsonl path is replayed as a transcript; any other
/// path is read as a purpose -> completions script.
BackendPtr backend_from_spec(const nlohmann::json& spec);

}  // namespace lilo::llm
