#include "lilo/opt/common.hpp"

#include "lilo/errors.hpp"

#include <algorithm>
#include <map>
#include <random>

namespace lilo::opt {

std::uint64_t derive_seed(std::uint64_t base, const std::string& purpose, int trial) {
  return fnv1a(std::to_string(base) + "/" + purpose + "/" + std::to_string(trial));
}

Matrix initial_design(const SearchSpace& space, int n, std::uint64_t seed, bool sobol) {
  if (sobol) return space.from_unit_rows(scrambled_sobol(n, space.dim(), seed));
  std::mt19937_64 rng(seed);
  Matrix u(n, space.dim());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < space.dim(); ++j) u(i, j) = static_cast<double>(rng() >> 11) * 0x1p-53;
  }
  return space.from_unit_rows(u);
}

std::string arm_name(int trial, int position) { return std::to_string(trial) + "_" + std::to_string(position); }

void run_experiments(const env::Environment& env, const Matrix& candidates, int trial, ExperimentDataset& data,
                     TrialRecord& record) {
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    const Vector x = env.space().clamp(candidates.row(i).transpose());
    const Vector y = env.evaluate(x);
    ExperimentRecord rec{arm_name(trial, static_cast<int>(i)), trial, x, y};
    record.arms.push_back({rec.arm_index, x, y, env.utility(y)});
    data.push_back(std::move(rec));
  }
}

gp::InputScaling input_scaling(const SearchSpace& space) {
  return gp::InputScaling::from_bounds(space.lower(), space.upper());
}

gp::InputScaling outcome_scaling(const env::Environment& env) {
  const auto& b = env.outcome_bounds();
  Vector lo = b.lower, hi = b.upper;
  for (Eigen::Index i = 0; i < lo.size(); ++i) {
    if (!(hi[i] > lo[i])) hi[i] = lo[i] + 1.0;
  }
  return gp::InputScaling::from_bounds(lo, hi);
}

int best_arm_by_model(const gp::PosteriorModel& outcome_model, const Matrix& outcomes) {
  const Vector mean = outcome_model.posterior_mean(outcomes);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < mean.size(); ++i) {
    if (mean[i] > mean[best]) best = i;
  }
  return static_cast<int>(best);
}

void record_metrics(const env::Environment& env, const ExperimentDataset& data,
                    const gp::PosteriorModel* outcome_model, TrialRecord& record) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& r : data) best = std::max(best, env.utility(r.y));
  record.max_utility = best;
  if (outcome_model != nullptr && !data.empty()) {
    const int b = best_arm_by_model(*outcome_model, outcomes_of(data));
    record.best_arm = data[b].arm_index;
    record.best_arm_utility = env.utility(data[b].y);
  }
}

nlohmann::json summarize(const gp::RegressionGp& model) {
  const auto& h = model.hyperparameters();
  return {{"type", "regression"},
          {"lengthscales", vector_json(h.lengthscales)},
          {"output_scale", h.output_scale},
          {"noise_variance", model.noise_variance()},
          {"num_train", model.num_train()}};
}

nlohmann::json summarize(const gp::PairwiseGp& model) {
  return {{"type", "pairwise"},
          {"lengthscales", vector_json(model.kernel().lengthscales())},
          {"output_scale", model.kernel().output_scale()},
          {"num_items", static_cast<int>(model.items().rows())},
          {"log_evidence", model.log_evidence()}};
}

CompactComparisons compact(const std::vector<Comparison>& comparisons) {
  std::map<int, int> index;
  for (const auto& c : comparisons) {
    index.emplace(c.winner, 0);
    index.emplace(c.loser, 0);
  }
  CompactComparisons out;
  for (auto& [arm, pos] : index) {
    pos = static_cast<int>(out.items.size());
    out.items.push_back(arm);
  }
  for (const auto& c : comparisons) out.comparisons.push_back({index.at(c.winner), index.at(c.loser)});
  return out;
}

Matrix rows_of(const Matrix& m, const std::vector<int>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

}  // namespace lilo::opt
