#pragma once

#include "lilo/types.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lilo::llm {

/// Body uses Python str.format syntax: "{name}" is a placeholder, "{{" and
/// "}}" are literal braces.
struct PromptTemplate {
  std::string name;
  std::string body;

  std::set<std::string> required_placeholders() const;
};

/// Names: init_questions, questions, questions_open, pairwise, scalar,
/// summary, prior_candidates, dm_answers, candidates_2step,
/// candidates_direct, prior_point, prior_area.
const PromptTemplate& prompt_template(const std::string& name);
std::vector<std::string> template_names();

using PromptContext = std::map<std::string, std::string>;

/// Throws TemplateError naming the first placeholder missing from `context`.
std::string render_prompt(const PromptTemplate& tmpl, const PromptContext& context);

/// Fixed-point with four decimals.
std::string format_number(double v);
/// "[y_1, y_2, y_3]"
std::string name_list(const std::vector<std::string>& names);
/// "[0.1000, 0.2500]"
std::string number_list(const Vector& v);

std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

struct TableColumns {
  bool inputs = false;   // x in unit-cube coordinates
  bool outcomes = true;  // y as observed
  /// Extra trailing column, one value per arm.
  std::optional<std::string> extra_header;
  std::vector<double> extra;
};

/// One row per arm, keyed by an arm_index column.
std::string experiment_table(const ExperimentDataset& data, const SearchSpace& space,
                             const std::vector<std::string>& outcome_names, const TableColumns& columns = {});

/// Two rows indexed option_0 and option_1.
std::string pair_table(const Vector& y0, const Vector& y1, const std::vector<std::string>& outcome_names);

/// "- LILO: <question>\n- DM: <answer>" per entry, or "(none yet)".
std::string render_feedback(const FeedbackDataset& feedback);

/// Numbered question list for the decision maker prompt.
std::string render_questions(const std::vector<std::string>& questions);

}  // namespace lilo::llm
