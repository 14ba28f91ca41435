#include "lilo/llm/parsers.hpp"

#include "lilo/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>

namespace lilo::llm {

namespace {

using nlohmann::json;

// End index (exclusive) of the balanced object starting at text[start] == '{'.
std::optional<std::size_t> balanced_end(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

std::vector<std::string> fenced_blocks(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string::npos) {
    const auto eol = text.find('\n', pos + 3);
    if (eol == std::string::npos) break;
    const auto close = text.find("```", eol + 1);
    out.push_back(text.substr(eol + 1, close == std::string::npos ? std::string::npos : close - eol - 1));
    if (close == std::string::npos) break;
    pos = close + 3;
  }
  return out;
}

std::optional<json> try_parse(const std::string& s) {
  json j = json::parse(strip_trailing_commas(s), nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return j;
}

std::optional<double> as_number(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    try {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

std::string as_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::string strip_trailing_commas(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool in_string = false, escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

std::vector<std::string> json_candidates(const std::string& text) {
  std::vector<std::string> out = fenced_blocks(text);
  const auto open = text.find('{');
  if (open != std::string::npos) {
    if (auto end = balanced_end(text, open)) out.push_back(text.substr(open, *end - open));
  }
  return out;
}

json parse_json_object(const std::string& text) {
  for (const auto& c : json_candidates(text)) {
    if (auto j = try_parse(c); j && j->is_object()) return *j;
  }
  throw ParseError("no JSON object found in completion", {text});
}

std::vector<json> parse_json_records(const std::string& text) {
  auto scan_records = [](const std::string& s) {
    std::vector<json> out;
    std::size_t pos = 0;
    while ((pos = s.find('{', pos)) != std::string::npos) {
      const auto end = balanced_end(s, pos);
      if (!end) break;
      if (auto j = try_parse(s.substr(pos, *end - pos)); j && j->is_object()) {
        out.push_back(std::move(*j));
        pos = *end;
      } else {
        ++pos;
      }
    }
    return out;
  };
  for (const auto& block : fenced_blocks(text)) {
    auto records = scan_records(block);
    if (!records.empty()) return records;
  }
  return scan_records(text);
}

std::vector<std::string> parse_questions(const std::string& text, int n, bool allow_missing) {
  const json j = parse_json_object(text);
  std::vector<std::string> out;
  int found = 0;
  for (int i = 1; i <= n; ++i) {
    const std::string key = "q" + std::to_string(i);
    if (j.contains(key) && !j[key].is_null()) {
      out.push_back(as_text(j[key]));
      ++found;
    } else if (allow_missing) {
      out.emplace_back();
    } else {
      throw ParseError("completion lacks key '" + key + "'", {text});
    }
  }
  if (found == 0) throw ParseError("completion has none of the keys q1..q" + std::to_string(n), {text});
  return out;
}

int parse_vote(const std::string& text) {
  const json j = parse_json_object(text);
  if (!j.contains("answer")) throw ParseError("completion lacks key 'answer'", {text});
  const auto v = as_number(j["answer"]);
  if (v && (*v == 0.0 || *v == 1.0)) return static_cast<int>(*v);
  throw ParseError("answer must be 0 or 1, got " + j["answer"].dump(), {text});
}

UtilityRecords parse_utilities(const std::string& text, const std::vector<std::string>& arms) {
  UtilityRecords out;
  for (const auto& rec : parse_json_records(text)) {
    if (!rec.contains("arm_index") || !rec.contains("p_accept")) continue;
    const std::string arm = as_text(rec["arm_index"]);
    if (std::find(arms.begin(), arms.end(), arm) == arms.end()) continue;
    const auto p = as_number(rec["p_accept"]);
    if (!p || !std::isfinite(*p)) continue;
    const double clamped = std::clamp(*p, 0.0, 1.0);
    if (clamped != *p) ++out.clamped;
    out.values[arm] = clamped;
  }
  if (out.values.empty()) throw ParseError("no usable p_accept records in completion", {text});
  return out;
}

std::string parse_summary(const std::string& text) {
  const json j = parse_json_object(text);
  if (!j.contains("summary")) throw ParseError("completion lacks key 'summary'", {text});
  return as_text(j["summary"]);
}

CandidateMatrix parse_candidates(const std::string& text, int n, int d) {
  const json j = parse_json_object(text);
  CandidateMatrix out{Matrix(n, d), 0};
  for (int i = 0; i < n; ++i) {
    const std::string key = std::to_string(i);
    if (!j.contains(key)) throw ParseError("completion lacks candidate '" + key + "'", {text});
    const json& c = j[key];
    if (!c.is_array() || static_cast<int>(c.size()) != d) {
      throw ParseError("candidate '" + key + "' must be a list of " + std::to_string(d) + " numbers", {text});
    }
    for (int k = 0; k < d; ++k) {
      const auto v = as_number(c[k]);
      if (!v || !std::isfinite(*v)) throw ParseError("candidate '" + key + "' has a non-numeric entry", {text});
      const double u = std::clamp(*v, 0.0, 1.0);
      if (u != *v) ++out.clamped;
      out.unit(i, k) = u;
    }
  }
  return out;
}

}  // namespace lilo::llm
