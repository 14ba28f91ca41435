#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lilo::llm {

struct TranscriptRecord {
  std::string request_id;
  int trial = 0;
  std::string purpose;
  std::string request_hash;
  std::string prompt;
  std::string completion;
  double latency_ms = 0.0;
  std::string parse_status;  // ok | malformed | backend-error
  int replicate = 0;
  int attempt = 0;
  int prompt_tokens = 0;
  int completion_tokens = 0;

  nlohmann::json to_json() const;
  static TranscriptRecord from_json(const nlohmann::json& j);
};

/// Append-only call log; optionally mirrored line by line to a JSONL file.
class TranscriptLog {
 public:
  TranscriptLog() = default;
  explicit TranscriptLog(std::filesystem::path path);

  void append(const TranscriptRecord& record);
  std::vector<TranscriptRecord> records() const;
  std::size_t size() const;

  static std::vector<TranscriptRecord> read(const std::filesystem::path& path);

 private:
  mutable std::mutex mu_;
  std::optional<std::filesystem::path> path_;
  std::vector<TranscriptRecord> records_;
};

/// Completions of the records that parsed, grouped by purpose in log order;
/// feeds a ScriptedBackend to replay a run.
std::map<std::string, std::vector<std::string>> replay_script(const std::vector<TranscriptRecord>& records);

}  // namespace lilo::llm
