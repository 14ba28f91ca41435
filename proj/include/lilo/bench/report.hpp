#pragma once

#include "lilo/opt/trace.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lilo::bench {

struct Stat {
  int n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  double ci95 = 0.0;  // half-width, 1.96 * se
};

Stat describe(const std::vector<double>& values);

/// Maps values affinely onto [0, 1]; a constant input maps to zeros.
std::vector<double> min_max_standardize(const std::vector<double>& values);

struct CellStats {
  std::string environment;
  std::string method;
  int trial = 0;
  Stat max_so_far;
  Stat best_point;
};

struct StandardizedRow {
  std::string method;
  int trial = 0;
  Stat max_so_far;
};

struct MissingCell {
  std::string environment;
  std::string method;
  int expected = 0;
  int found = 0;
};

struct AggregateReport {
  std::vector<CellStats> cells;  // sorted by environment, method, trial
  std::vector<StandardizedRow> standardized;
  std::vector<MissingCell> missing;

  std::vector<std::string> environments() const;
  std::vector<std::string> methods(const std::string& environment) const;
  const CellStats* find(const std::string& environment, const std::string& method, int trial) const;
};

/// Pure function of the traces; input order does not matter. With
/// `expected_replications` of 0 the largest observed count is used.
AggregateReport aggregate(std::vector<opt::Trace> traces, int expected_replications = 0,
                          const std::vector<std::pair<std::string, std::string>>& expected_cells = {});

/// Every *.jsonl trace below `dir`, skipping transcripts.
std::vector<opt::Trace> load_traces(const std::filesystem::path& dir);

std::string report_csv(const AggregateReport& report);
/// Inverse of report_csv for the per-cell rows.
std::vector<CellStats> parse_report_csv(const std::string& text);
std::string standardized_csv(const AggregateReport& report);

/// "0.54 ± 0.03"
std::string format_cell(double mean, double se);
/// Rows are trials, columns are methods with data in this environment.
std::string table_markdown(const AggregateReport& report, const std::string& environment);
std::string table_csv(const AggregateReport& report, const std::string& environment);

enum class TableFormat { Csv, Markdown, Both };

/// report.csv, standardized.csv, missing.csv and tables/<env>.{csv,md}.
void write_report(const AggregateReport& report, const std::filesystem::path& dir,
                  TableFormat format = TableFormat::Both);

}  // namespace lilo::bench
