#include "lilo/llm/prompts.hpp"

#include "lilo/errors.hpp"

#include <cstdio>

namespace lilo::llm {

namespace {

const char* const kInitQuestions = R"PROMPT(You are an expert in determining whether a human decision maker (DM) is going to be satisfied with a set of experimental outcomes y = {y_names}.

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

## Your task:
Given the above your task is to predict the probability of the decision maker being satisfied with the experimental outcomes.

In order to better understand the decision maker's utility function you want to ask them about their optimization goals.

Provide a list of questions you would ask the decision maker to better understand their internal utility model.

Return your final answer a a json file with the following format containing exactly {n_questions} most important questions:
```json
{{
    "q1" : <question1>,
    ...
    "q{n_questions}" : <question{n_questions}>
}}
```)PROMPT";

const char* const kQuestions = R"PROMPT(You are an expert in determining w whether a human decision maker (DM) is going to be satisfied with a set of experimental outcomes y = {y_names}.

## Experimental outcomes:
So far, we have obtained the following experimental outcomes:

{experiment_data}

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

## Your task:
Given the above your task is to predict pairwise preferences between experimental outcomes.

In order to better understand the decision maker's utility function you want to ask them about their optimization goals or for feedback regarding specific experimental outcomes.

Here are some points it may be useful to ask the decision maker about {selected_outcome_indices}.

First, analyse the decision maker's goals and feedback messages to understand their overall preferences.
Then, provide a list of questions you would ask the decision maker to better understand their internal utility model.
Your questions can be either general or referring to specific outcomes. For instance, you may ask the decision maker:
- questions clairfying the optimzation objective,
- to rank two (or more) outcomes,
- how to improve certain outcomes,
- for a likert-scale rating regarding a specific outcome,
- etc.
When referring to specific outcomes, always state the arm_index involved.
Your questions should help you predict pairwise preferences between any two experimental outcomes from the set of experimental outcomes provided above.

Return your final answer a a json file with the following format containing exactly {n_questions} most important questions:
```json
{{
    "q1" : <question1>,
    ...
    "q{n_questions}" : <question{n_questions}>
}})PROMPT";

const char* const kPairwise = R"PROMPT(You are an expert in determining whether a human decision maker (DM) is going to be satisfied with a set of experimental outcomes y = {y_names}.

## All experimental outcomes:

{experiment_data}

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

{human_feedback_summary}

## Your task:
Given a pair of outcomes--option_0 and option_1, your goal is to decide which one is more preferable according to the DM's preferences.

{pair_str}

Provide your prediction as a json file with the following format:
```json
{{
    "reasoning": "Your reasoning about the DM's preferences and option_0 vs. option_1. Do not insert new lines in your reasoning.",
    "answer" : 0 or 1
}}
```
where in "answer" you should return 0 if option_0 is preferred, or 1 if option_1 is preferred.
Return just the json file (with the header ```json), nothing else.)PROMPT";

const char* const kScalar = R"PROMPT(You are an expert in determining whether a human decision maker (DM) is going to be satisfied with a set of experimental outcomes y = {y_names}.

## Experimental outcomes:
So far, we have obtained the following experimental outcomes:

{experiment_data}

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

{human_feedback_summary}

## Your task:
Given the above your task is to predict the probability of the decision maker being satisfied with the experimental outcomes.

First, analyse the human feedback messages to understand the DM's preferences.
Then, provide your predictions for all y's in the set of all experimental outcomes above.
Return your final answer as a jsonl file with the following format:

```jsonl
{{
    "arm_index": "{idx0}",
    "reasoning": <reasoning>,
    "p_accept": <probability>
}}
{{
    "arm_index": "{idx1}",
    "reasoning": <reasoning>,
    "p_accept": <probability>
}}
...
{{
    "arm_index": "{idxn}",
    "reasoning": <reasoning>,
    "p_accept": <probability>
}}
```
Where <reasoning> should be a short reasoning for your prediction and <probability> should be your best estimate for the probability between 0 and 1 that the DM will be satisfied with the corresponding outcome.

Provide your predictions for ALL y's in the set of experimental outcomes above. That is, for EACH outcome from {idx0}. to {idxn}.
Do not generate any Python code. Just return your predictions as plain text.)PROMPT";

const char* const kSummary = R"PROMPT(You are an expert in determining whether a human decision maker (DM) is going to be satisfied with a set of experimental outcomes y = {y_names}.

## Experimental outcomes:
So far, we have obtained the following experimental outcomes:

{experiment_data}

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

## Your task:
Given the above your task is to summarize the human feedback messages into a clear description of the DM's optimization goals.
Make your summary as quantitative as possible so that it can be easily used for utility estimation.

After analysis the human feedback messages, return your final answer as a json file with the following format:
```json
{{
    "summary": <summary>
}}
```
Remember about the ```json header!)PROMPT";

const char* const kPriorCandidates = R"PROMPT(You are performing optimization of a utility function u(x) = g(y) = g(f(x)), where x is a vector of parameters: x = {x_names} and y = f(x) = {y_names} is a vector of outcomes.
Each dimensions of x is in the range [0, 1].
Your goal is to find the parameters x that maximize the utility.

## Prior knowledge:
You have obtained the following prior knowledge about the experiment:
{prior_knowledge}

## Human feedback messages:
You have also received the following messages from the DM:
{human_feedback}

## Your task:
Given the above your task is the generate a set of {n_candidates} candidate parameters x for the next round of experimentation.

First, analyse the information above, then return your final answer as a json file with the following format:
```json
{{
    "0": <candidate0>,
    "1": <candidate1>,
    ...
    "{n}": <candidate{n}>,
}}
```
Where each <candidatei> is a list of the candidate parameter values in [0, 1].
Do not write a python code for candidate generation. Just return the required json.
Do not add any comments to your json. Remember about the ```json header.)PROMPT";

const char* const kDmAnswers = R"PROMPT(Suppose you are a decision maker evaluating the results of a multi-objective optimization problem.

You are given a set of multi-dimensional outcomes y = {y_names}

{utility_func_desc}

You have observed the following outcomes with their corresponding utility values and contributions to the overall utility.

## Outcomes:

{outcomes_markdown}

The utility values are on a scale [0, 1], where (1 - very satisfied, 0.5 - neutral, 0 - very dissatisfied).

Based on the above information, provide answers to the following questions:

## Questions:

{questions_str}

Return your final answer as a json file with the following format:
```json
{{
    "q1" : <answer to q1>,
    ...
    "q{n_questions}" : <answer to q{n_questions}>
}}
```
Before providing your final answers, analyze the shape of the utility function in light of the questions posed.
In your final answers, you cannot reveal the explicit formula of the utility function.
The form and the values of the utility functions is a "latent" feature of the human expert, thus you should not refer to it explicitly or even mention its existence. 
{utility_constraints}
State your answers in the first person (you are the decision maker). Avoid vacuous statements.)PROMPT";

const char* const kCandidates2Step = R"PROMPT(You are performing optimization of a utility function u(x) = g(y) = g(f(x)), where x is a vector of parameters: x = {x_names} and y = f(x) = {y_names} is a vector of outcomes.
Each dimensions of x is in the range [0, 1].
Your goal is to find the parameters x that maximize the utility.

## Experimental Outcomes
So far, you have also observed the following inputs x and their estimated utilities:

{experiment_data}

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

## Your task:
Given the above your task is the generate a set of {n_candidates} candidate parameters x for the next round of experimentation.
Your candidates should maximize the expected improvement over the current best candidate x^* = {x_star} with utility u(x^*) = {u_star}.

First, analyse the information above, then return your final answer as a json file with the following format:
```json
{{
    "0": <candidate0>,
    "1": <candidate1>,
    ...
    "{n}": <candidate{n}>,
}}
```
Where each <candidatei> is a list of the candidate parameter values in [0, 1].
Do not write a python code for candidate generation. Just return the required json.
Do not add any comments to your json. Remember about the ```json header.)PROMPT";

const char* const kCandidatesDirect = R"PROMPT(You are performing optimization of a utility function u(x) = g(y) = g(f(x)), where x is a vector of parameters: x = {x_names} and y = f(x) = {y_names} is a vector of outcomes.
Each dimensions of x is in the range [0, 1].
Your goal is to find the parameters x that maximize the utility.

{experiment_data}

## Human feedback messages:
We have also received the following messages from the DM:

{human_feedback}

## Your task:
Given the above your task is the generate a set of {n_candidates} candidate parameters x for the next round of experimentation.
First, analyze the human feedback messages to understand the DM's preferences.
Then, generate a set of {n_candidates} candidate parameters x, trading-off exploration and exploitation.
Return your final answer as a json file with the following format:
```json
{{
    "0": <candidate0>,
    "1": <candidate1>,
    ...
    "{n}": <candidate{n}>,
}}
```
Where each <candidatei> is a list of the candidate parameter values: {x_names}, each in [0, 1].
Do not write a python code for candidate generation. Just return the required json.
Do not add any comments to your json.)PROMPT";

const char* const kPriorPoint = R"PROMPT(- Based on my experience, the following inputs should bring good results: {promising_point}.)PROMPT";

const char* const kPriorArea = R"PROMPT(- Based on my experience, inputs within these ranges should bring good results {bounds}:)PROMPT";

const char* const kHighlightSentence =
    "Here are some points it may be useful to ask the decision maker about {selected_outcome_indices}.\n\n";

std::string without_highlight(std::string body) {
  const auto pos = body.find(kHighlightSentence);
  if (pos == std::string::npos) throw TemplateError("questions template lacks the highlight sentence");
  return body.erase(pos, std::char_traits<char>::length(kHighlightSentence));
}

const std::map<std::string, PromptTemplate>& registry() {
  static const std::map<std::string, PromptTemplate> templates = [] {
    std::map<std::string, PromptTemplate> m;
    auto add = [&](const std::string& name, std::string body) { m[name] = PromptTemplate{name, std::move(body)}; };
    add("init_questions", kInitQuestions);
    add("questions", kQuestions);
    add("questions_open", without_highlight(kQuestions));
    add("pairwise", kPairwise);
    add("scalar", kScalar);
    add("summary", kSummary);
    add("prior_candidates", kPriorCandidates);
    add("dm_answers", kDmAnswers);
    add("candidates_2step", kCandidates2Step);
    add("candidates_direct", kCandidatesDirect);
    add("prior_point", kPriorPoint);
    add("prior_area", kPriorArea);
    return m;
  }();
  return templates;
}

// Calls `literal` for text runs and `field` for placeholder names.
template <class Literal, class Field>
void scan(const std::string& body, const std::string& name, Literal literal, Field field) {
  std::size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      literal("{");
      i += 2;
    } else if (c == '}' && i + 1 < body.size() && body[i + 1] == '}') {
      literal("}");
      i += 2;
    } else if (c == '{') {
      const auto close = body.find('}', i);
      if (close == std::string::npos) throw TemplateError("template " + name + ": unterminated placeholder");
      field(body.substr(i + 1, close - i - 1));
      i = close + 1;
    } else if (c == '}') {
      throw TemplateError("template " + name + ": stray '}'");
    } else {
      const auto next = body.find_first_of("{}", i);
      const auto end = next == std::string::npos ? body.size() : next;
      literal(body.substr(i, end - i));
      i = end;
    }
  }
}

}  // namespace

std::set<std::string> PromptTemplate::required_placeholders() const {
  std::set<std::string> out;
  scan(body, name, [](const std::string&) {}, [&](const std::string& f) { out.insert(f); });
  return out;
}

const PromptTemplate& prompt_template(const std::string& name) {
  const auto& r = registry();
  auto it = r.find(name);
  if (it == r.end()) throw TemplateError("unknown prompt template '" + name + "'");
  return it->second;
}

std::vector<std::string> template_names() {
  std::vector<std::string> out;
  for (const auto& [name, t] : registry()) out.push_back(name);
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const PromptContext& context) {
  std::string out;
  out.reserve(tmpl.body.size() * 2);
  scan(
      tmpl.body, tmpl.name, [&](const std::string& s) { out += s; },
      [&](const std::string& f) {
        auto it = context.find(f);
        if (it == context.end()) throw TemplateError("template " + tmpl.name + ": missing placeholder '" + f + "'");
        out += it->second;
      });
  return out;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  std::string s(buf);
  return s == "-0.0000" ? "0.0000" : s;
}

std::string name_list(const std::vector<std::string>& names) {
  std::string out = "[";
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
  return out + "]";
}

std::string number_list(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v[i]);
  return out + "]";
}

std::string markdown_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  auto line = [](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const auto& c : cells) s += " " + c + " |";
    return s + "\n";
  };
  std::string out = line(header);
  out += "|";
  for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  if (!out.empty()) out.pop_back();
  return out;
}

std::string experiment_table(const ExperimentDataset& data, const SearchSpace& space,
                             const std::vector<std::string>& outcome_names, const TableColumns& columns) {
  if (columns.extra_header && columns.extra.size() != data.size()) {
    throw InputError("experiment table: extra column has wrong length");
  }
  std::vector<std::string> header{"arm_index"};
  if (columns.inputs) header.insert(header.end(), space.names().begin(), space.names().end());
  if (columns.outcomes) header.insert(header.end(), outcome_names.begin(), outcome_names.end());
  if (columns.extra_header) header.push_back(*columns.extra_header);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    std::vector<std::string> row{r.arm_index};
    if (columns.inputs) {
      const Vector u = space.to_unit(r.x);
      for (Eigen::Index j = 0; j < u.size(); ++j) row.push_back(format_number(u[j]));
    }
    if (columns.outcomes) {
      for (Eigen::Index j = 0; j < r.y.size(); ++j) row.push_back(format_number(r.y[j]));
    }
    if (columns.extra_header) row.push_back(format_number(columns.extra[i]));
    rows.push_back(std::move(row));
  }
  return markdown_table(header, rows);
}

std::string pair_table(const Vector& y0, const Vector& y1, const std::vector<std::string>& outcome_names) {
  std::vector<std::string> header{"option"};
  header.insert(header.end(), outcome_names.begin(), outcome_names.end());
  std::vector<std::vector<std::string>> rows;
  int k = 0;
  for (const Vector* y : {&y0, &y1}) {
    std::vector<std::string> row{"option_" + std::to_string(k++)};
    for (Eigen::Index j = 0; j < y->size(); ++j) row.push_back(format_number((*y)[j]));
    rows.push_back(std::move(row));
  }
  return markdown_table(header, rows);
}

std::string render_feedback(const FeedbackDataset& feedback) {
  if (feedback.empty()) return "(none yet)";
  std::string out;
  for (const auto& e : feedback) {
    if (!out.empty()) out += "\n";
    out += "- LILO: " + e.question + "\n- DM: " + e.answer;
  }
  return out;
}

std::string render_questions(const std::vector<std::string>& questions) {
  std::string out;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    if (i) out += "\n";
    out += "q" + std::to_string(i + 1) + ": " + questions[i];
  }
  return out;
}

}  // namespace lilo::llm
