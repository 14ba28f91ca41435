#include "lilo/opt/baselines.hpp"

#include "lilo/acq/acquisition.hpp"
#include "lilo/errors.hpp"
#include "lilo/opt/common.hpp"

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <set>

namespace lilo::opt {

namespace {

struct LoopState {
  ExperimentDataset data;
  std::shared_ptr<gp::RegressionGp> mx;
};

Matrix next_candidates(const env::Environment& env, const LoopConfig& config, const LoopState& state, int trial) {
  const int q = config.effective_batch_exp(env.input_dim());
  if (trial == 1 || !state.mx) {
    return initial_design(env.space(), q, derive_seed(config.seed, "init", trial), config.sobol_init);
  }
  acq::AcqConfig acq = config.acq;
  acq.seed = derive_seed(config.seed, "acq", trial);
  return acq::optimize_acqf(state.mx, inputs_of(state.data), env.space(), q, acq).points;
}

std::shared_ptr<gp::RegressionGp> fit_mx(const env::Environment& env, const LoopConfig& config, const Matrix& x,
                                         const Vector& targets, int trial) {
  gp::FitConfig fit = config.fit;
  fit.seed = derive_seed(config.seed, "fit-mx", trial);
  return std::make_shared<gp::RegressionGp>(gp::RegressionGp::fit(x, targets, fit, input_scaling(env.space())));
}

Trace start_trace(const env::Environment& env, const LoopConfig& config, const std::string& method) {
  Trace trace;
  trace.method = method;
  trace.environment = env.id();
  trace.seed = config.seed;
  trace.config = config.to_json();
  trace.trials.push_back(TrialRecord{});
  return trace;
}

}  // namespace

Trace run_true_utility_bo(const env::Environment& env, const LoopConfig& config) {
  config.validate();
  Trace trace = start_trace(env, config, "true-utility-bo");
  LoopState state;
  std::vector<int> labeled;
  std::vector<double> utilities;
  std::shared_ptr<gp::RegressionGp> my;

  for (int n = 1; n <= config.trials; ++n) {
    TrialRecord rec;
    rec.trial = n;
    run_experiments(env, next_candidates(env, config, state, n), n, state.data, rec);
    const Matrix ys = outcomes_of(state.data);
    const int m = static_cast<int>(state.data.size());

    std::set<int> already(labeled.begin(), labeled.end());
    std::vector<int> pool;
    for (int i = 0; i < m; ++i) {
      if (!already.count(i)) pool.push_back(i);
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch_pf), pool.size());
    std::vector<int> chosen;
    if (n == 1 || !my) {
      std::mt19937_64 rng(derive_seed(config.seed, "feedback", n));
      for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (pool.size() - i));
        std::swap(pool[i], pool[j]);
      }
      chosen.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    } else {
      // Two-point EUBO of each unlabeled outcome against the incumbent outcome.
      const int inc = best_arm_by_model(*my, ys);
      std::vector<std::pair<double, int>> scored;
      for (int i : pool) {
        Matrix q(2, ys.cols());
        q.row(0) = ys.row(i);
        q.row(1) = ys.row(inc);
        scored.push_back({acq::eubo(my->posterior(q)), i});
      }
      std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
      for (std::size_t i = 0; i < take; ++i) chosen.push_back(scored[i].second);
    }
    for (int i : chosen) {
      labeled.push_back(i);
      utilities.push_back(env.utility(state.data[i].y));
      rec.scalar_labels.push_back({state.data[i].arm_index, {utilities.back()}});
    }

    gp::FitConfig fit = config.fit;
    fit.seed = derive_seed(config.seed, "fit-my", n);
    my = std::make_shared<gp::RegressionGp>(gp::RegressionGp::fit(
        rows_of(ys, labeled), Eigen::Map<const Vector>(utilities.data(), static_cast<Eigen::Index>(utilities.size())),
        fit, outcome_scaling(env)));
    const Vector u_hat = my->posterior_mean(ys);
    state.mx = fit_mx(env, config, inputs_of(state.data), u_hat, n);

    rec.models = {{"my", summarize(*my)}, {"mx", summarize(*state.mx)}};
    record_metrics(env, state.data, my.get(), rec);
    trace.trials.push_back(std::move(rec));
  }
  return trace;
}

Trace run_preferential_bo(const env::Environment& env, const LoopConfig& config) {
  config.validate();
  Trace trace = start_trace(env, config, "preferential-bo");
  LoopState state;
  std::vector<Comparison> comparisons;
  std::shared_ptr<gp::PairwiseGp> my;

  for (int n = 1; n <= config.trials; ++n) {
    TrialRecord rec;
    rec.trial = n;
    run_experiments(env, next_candidates(env, config, state, n), n, state.data, rec);
    const Matrix ys = outcomes_of(state.data);

    const auto pairs = acq::select_top_pairs(n == 1 ? nullptr : my.get(), ys, config.batch_pf, acq::PairStrategy::EuboY,
                                             derive_seed(config.seed, "feedback", n));
    for (const auto& p : pairs) {
      const int label = env::oracle_pairwise(env, state.data[p.first].y, state.data[p.second].y);
      comparisons.push_back(label == 0 ? Comparison{p.first, p.second} : Comparison{p.second, p.first});
      rec.labeled_pairs.push_back({state.data[p.first].arm_index, state.data[p.second].arm_index, {label}});
    }

    const CompactComparisons cc = compact(comparisons);
    gp::FitConfig fit = config.fit;
    fit.seed = derive_seed(config.seed, "fit-my", n);
    my = std::make_shared<gp::PairwiseGp>(
        gp::PairwiseGp::fit(rows_of(ys, cc.items), cc.comparisons, fit, outcome_scaling(env)));
    const Vector u_hat = my->posterior_mean(ys);
    state.mx = fit_mx(env, config, inputs_of(state.data), u_hat, n);

    rec.models = {{"my", summarize(*my)}, {"mx", summarize(*state.mx)}};
    record_metrics(env, state.data, my.get(), rec);
    trace.trials.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace lilo::opt
