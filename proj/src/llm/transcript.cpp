#include "lilo/llm/transcript.hpp"

#include "lilo/errors.hpp"

#include <fstream>

namespace lilo::llm {

nlohmann::json TranscriptRecord::to_json() const {
  return {{"request_id", request_id}, {"trial", trial},
          {"purpose", purpose},       {"request_hash", request_hash},
          {"prompt", prompt},         {"completion", completion},
          {"latency_ms", latency_ms}, {"parse_status", parse_status},
          {"replicate", replicate},   {"attempt", attempt},
          {"prompt_tokens", prompt_tokens}, {"completion_tokens", completion_tokens}};
}

TranscriptRecord TranscriptRecord::from_json(const nlohmann::json& j) {
  TranscriptRecord r;
  r.request_id = j.value("request_id", "");
  r.trial = j.value("trial", 0);
  r.purpose = j.at("purpose").get<std::string>();
  r.request_hash = j.value("request_hash", "");
  r.prompt = j.value("prompt", "");
  r.completion = j.at("completion").get<std::string>();
  r.latency_ms = j.value("latency_ms", 0.0);
  r.parse_status = j.value("parse_status", "");
  r.replicate = j.value("replicate", 0);
  r.attempt = j.value("attempt", 0);
  r.prompt_tokens = j.value("prompt_tokens", 0);
  r.completion_tokens = j.value("completion_tokens", 0);
  return r;
}

TranscriptLog::TranscriptLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
}

void TranscriptLog::append(const TranscriptRecord& record) {
  std::lock_guard lock(mu_);
  records_.push_back(record);
  if (path_) {
    std::ofstream out(*path_, std::ios::app);
    if (!out) throw InputError("cannot append to transcript " + path_->string());
    out << record.to_json().dump() << "\n";
  }
}

std::vector<TranscriptRecord> TranscriptLog::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t TranscriptLog::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<TranscriptRecord> TranscriptLog::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("transcript not found: " + path.string());
  std::vector<TranscriptRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(TranscriptRecord::from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::map<std::string, std::vector<std::string>> replay_script(const std::vector<TranscriptRecord>& records) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& r : records) {
    if (r.parse_status != "backend-error") out[r.purpose].push_back(r.completion);
  }
  return out;
}

}  // namespace lilo::llm
