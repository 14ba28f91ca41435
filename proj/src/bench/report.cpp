#include "lilo/bench/report.hpp"

#include "lilo/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace lilo::bench {

namespace {

std::string stat_columns(const Stat& s) {
  return fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}", s.n, s.mean, s.sd, s.se, s.ci95);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

Stat parse_stat(const std::vector<std::string>& f, std::size_t at) {
  Stat s;
  s.n = std::stoi(f.at(at));
  s.mean = std::stod(f.at(at + 1));
  s.sd = std::stod(f.at(at + 2));
  s.se = std::stod(f.at(at + 3));
  s.ci95 = std::stod(f.at(at + 4));
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

int max_trial(const AggregateReport& report, const std::string& environment) {
  int t = 0;
  for (const auto& c : report.cells) {
    if (c.environment == environment) t = std::max(t, c.trial);
  }
  return t;
}

}  // namespace

Stat describe(const std::vector<double>& values) {
  Stat s;
  s.n = static_cast<int>(values.size());
  if (s.n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / (s.n - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(s.n));
  }
  s.ci95 = 1.96 * s.se;
  return s;
}

std::vector<double> min_max_standardize(const std::vector<double>& values) {
  if (values.empty()) return {};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(range > 0.0 ? (v - *lo) / range : 0.0);
  return out;
}

std::vector<std::string> AggregateReport::environments() const {
  std::set<std::string> s;
  for (const auto& c : cells) s.insert(c.environment);
  return {s.begin(), s.end()};
}

std::vector<std::string> AggregateReport::methods(const std::string& environment) const {
  std::set<std::string> s;
  for (const auto& c : cells) {
    if (c.environment == environment && c.max_so_far.n > 0) s.insert(c.method);
  }
  return {s.begin(), s.end()};
}

const CellStats* AggregateReport::find(const std::string& environment, const std::string& method, int trial) const {
  for (const auto& c : cells) {
    if (c.environment == environment && c.method == method && c.trial == trial) return &c;
  }
  return nullptr;
}

AggregateReport aggregate(std::vector<opt::Trace> traces, int expected_replications,
                          const std::vector<std::pair<std::string, std::string>>& expected_cells) {
  std::sort(traces.begin(), traces.end(), [](const opt::Trace& a, const opt::Trace& b) {
    return std::tie(a.environment, a.method, a.seed) < std::tie(b.environment, b.method, b.seed);
  });
  using Key = std::tuple<std::string, std::string, int>;
  std::map<Key, std::vector<double>> max_values, best_values;
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const auto& t : traces) {
    ++counts[{t.environment, t.method}];
    const auto m = t.max_so_far();
    const auto b = t.best_point_utilities();
    for (std::size_t i = 0; i < m.size(); ++i) max_values[{t.environment, t.method, static_cast<int>(i) + 1}].push_back(m[i]);
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (std::isfinite(b[i])) best_values[{t.environment, t.method, static_cast<int>(i) + 1}].push_back(b[i]);
    }
  }

  AggregateReport report;
  for (const auto& [key, values] : max_values) {
    CellStats c;
    std::tie(c.environment, c.method, c.trial) = key;
    c.max_so_far = describe(values);
    if (auto it = best_values.find(key); it != best_values.end()) c.best_point = describe(it->second);
    report.cells.push_back(std::move(c));
  }

  int expected = expected_replications;
  if (expected <= 0) {
    for (const auto& [cell, n] : counts) expected = std::max(expected, n);
  }
  auto cells = expected_cells;
  for (const auto& [cell, n] : counts) cells.push_back(cell);
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  for (const auto& cell : cells) {
    const auto it = counts.find(cell);
    const int found = it == counts.end() ? 0 : it->second;
    if (found < expected) report.missing.push_back({cell.first, cell.second, expected, found});
  }

  // Pool each environment's max-so-far values over methods, trials and replicates.
  std::map<std::string, std::vector<std::pair<Key, std::size_t>>> pooled_index;
  std::map<std::string, std::vector<double>> pooled;
  for (const auto& [key, values] : max_values) {
    const std::string& env = std::get<0>(key);
    for (std::size_t i = 0; i < values.size(); ++i) {
      pooled_index[env].push_back({key, i});
      pooled[env].push_back(values[i]);
    }
  }
  std::map<std::pair<std::string, int>, std::vector<double>> standardized;
  for (const auto& [env, values] : pooled) {
    const auto z = min_max_standardize(values);
    const auto& idx = pooled_index[env];
    for (std::size_t i = 0; i < z.size(); ++i) {
      const Key& key = idx[i].first;
      standardized[{std::get<1>(key), std::get<2>(key)}].push_back(z[i]);
    }
  }
  for (const auto& [key, values] : standardized) report.standardized.push_back({key.first, key.second, describe(values)});
  return report;
}

std::vector<opt::Trace> load_traces(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw NotFoundError("no trace directory " + dir.string());
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".jsonl" || name.find(".transcript.") != std::string::npos) continue;
    paths.push_back(entry.path());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<opt::Trace> out;
  for (const auto& p : paths) out.push_back(opt::Trace::read(p));
  return out;
}

std::string report_csv(const AggregateReport& report) {
  std::string out =
      "environment,method,trial,max_n,max_mean,max_sd,max_se,max_ci95,best_n,best_mean,best_sd,best_se,best_ci95\n";
  for (const auto& c : report.cells) {
    out += fmt::format("{},{},{},{},{}\n", c.environment, c.method, c.trial, stat_columns(c.max_so_far),
                       stat_columns(c.best_point));
  }
  return out;
}

std::vector<CellStats> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("environment,method,trial", 0) != 0) {
    throw ParseError("report csv: missing header");
  }
  std::vector<CellStats> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) throw ParseError("report csv: expected 13 fields, got " + std::to_string(f.size()));
    CellStats c;
    c.environment = f[0];
    c.method = f[1];
    c.trial = std::stoi(f[2]);
    c.max_so_far = parse_stat(f, 3);
    c.best_point = parse_stat(f, 8);
    out.push_back(std::move(c));
  }
  return out;
}

std::string standardized_csv(const AggregateReport& report) {
  std::string out = "method,trial,n,mean,sd,se,ci95\n";
  for (const auto& r : report.standardized) out += fmt::format("{},{},{}\n", r.method, r.trial, stat_columns(r.max_so_far));
  return out;
}

std::string format_cell(double mean, double se) { return fmt::format("{:.2f} ± {:.2f}", mean, se); }

std::string table_markdown(const AggregateReport& report, const std::string& environment) {
  const auto methods = report.methods(environment);
  std::string out = "| trial |";
  std::string rule = "|---|";
  for (const auto& m : methods) {
    out += " " + m + " |";
    rule += "---|";
  }
  out += "\n" + rule + "\n";
  for (int t = 1; t <= max_trial(report, environment); ++t) {
    out += "| " + std::to_string(t) + " |";
    for (const auto& m : methods) {
      const CellStats* c = report.find(environment, m, t);
      out += " " + (c ? format_cell(c->max_so_far.mean, c->max_so_far.se) : std::string("n/a")) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string table_csv(const AggregateReport& report, const std::string& environment) {
  const auto methods = report.methods(environment);
  std::string out = "trial";
  for (const auto& m : methods) out += "," + m + "_mean," + m + "_se";
  out += "\n";
  for (int t = 1; t <= max_trial(report, environment); ++t) {
    out += std::to_string(t);
    for (const auto& m : methods) {
      const CellStats* c = report.find(environment, m, t);
      out += c ? fmt::format(",{:.17g},{:.17g}", c->max_so_far.mean, c->max_so_far.se) : std::string(",,");
    }
    out += "\n";
  }
  return out;
}

void write_report(const AggregateReport& report, const std::filesystem::path& dir, TableFormat format) {
  write_file(dir / "report.csv", report_csv(report));
  write_file(dir / "standardized.csv", standardized_csv(report));
  std::string missing = "environment,method,expected,found\n";
  for (const auto& m : report.missing) missing += fmt::format("{},{},{},{}\n", m.environment, m.method, m.expected, m.found);
  write_file(dir / "missing.csv", missing);
  for (const auto& env : report.environments()) {
    if (format != TableFormat::Markdown) write_file(dir / "tables" / (env + ".csv"), table_csv(report, env));
    if (format != TableFormat::Csv) write_file(dir / "tables" / (env + ".md"), table_markdown(report, env));
  }
}

}  // namespace lilo::bench
