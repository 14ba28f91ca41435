#pragma once

#include "lilo/types.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace lilo::llm {

/// JSON payloads found in a completion, in the order they should be tried:
/// fenced blocks first, then the outermost brace-balanced span.
std::vector<std::string> json_candidates(const std::string& text);

/// Removes commas that directly precede '}' or ']' outside strings.
std::string strip_trailing_commas(const std::string& text);

/// First candidate that parses as a JSON object. Throws ParseError.
nlohmann::json parse_json_object(const std::string& text);

/// Every top-level JSON object in the completion, in order. Used for JSONL
/// answers whose records may span several lines.
std::vector<nlohmann::json> parse_json_records(const std::string& text);

/// Values of q1..qn as text. With `allow_missing`, absent keys come back
/// empty; otherwise any absent key throws.
std::vector<std::string> parse_questions(const std::string& text, int n, bool allow_missing = false);

/// "answer" as 0 or 1. Accepts integers, integral floats, booleans and
/// numeric strings.
int parse_vote(const std::string& text);

struct UtilityRecords {
  std::map<std::string, double> values;  // arm_index -> p_accept in [0, 1]
  int clamped = 0;
};

/// JSONL p_accept records for the given arms. Unknown arms are ignored;
/// throws if no known arm is present.
UtilityRecords parse_utilities(const std::string& text, const std::vector<std::string>& arms);

std::string parse_summary(const std::string& text);

struct CandidateMatrix {
  Matrix unit;  // n x d, every entry clamped into [0, 1]
  int clamped = 0;
};

/// Keys "0".."n-1", each a list of d numbers.
CandidateMatrix parse_candidates(const std::string& text, int n, int d);

}  // namespace lilo::llm
