#pragma once

#include "lilo/env/environment.hpp"
#include "lilo/gp/pairwise_gp.hpp"
#include "lilo/gp/regression_gp.hpp"
#include "lilo/opt/config.hpp"
#include "lilo/opt/trace.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lilo::opt {

/// Sub-seed for one purpose within one trial; stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, const std::string& purpose, int trial);

/// Trial-1 design: n points in the space, scrambled Sobol or i.i.d. uniform.
Matrix initial_design(const SearchSpace& space, int n, std::uint64_t seed, bool sobol);

std::string arm_name(int trial, int position);

/// Evaluates candidates and appends them to both the dataset and the record.
void run_experiments(const env::Environment& env, const Matrix& candidates, int trial, ExperimentDataset& data,
                     TrialRecord& record);

gp::InputScaling input_scaling(const SearchSpace& space);
gp::InputScaling outcome_scaling(const env::Environment& env);

/// Index of the arm whose outcome has the largest posterior mean.
int best_arm_by_model(const gp::PosteriorModel& outcome_model, const Matrix& outcomes);

/// Fills max_utility, best_arm and best_arm_utility.
void record_metrics(const env::Environment& env, const ExperimentDataset& data,
                    const gp::PosteriorModel* outcome_model, TrialRecord& record);

nlohmann::json summarize(const gp::RegressionGp& model);
nlohmann::json summarize(const gp::PairwiseGp& model);

/// Items that appear in the comparisons, with comparisons re-indexed to them.
struct CompactComparisons {
  std::vector<int> items;  // arm indices, ascending
  std::vector<Comparison> comparisons;
};
CompactComparisons compact(const std::vector<Comparison>& comparisons);

Matrix rows_of(const Matrix& m, const std::vector<int>& idx);

}  // namespace lilo::opt
