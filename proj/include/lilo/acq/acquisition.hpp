#pragma once

#include "lilo/gp/posterior.hpp"
#include "lilo/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lilo::acq {

struct AcqConfig {
  int restarts = 10;
  int raw_samples = 512;
  int max_iters = 100;
  /// Finite-difference step as a fraction of box width.
  double fd_step = 1e-3;
  /// Pseudo-observation noise for the kriging-believer update.
  double believer_noise = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// log E[max(U - incumbent, 0)] for U ~ N(mean, sd^2).
double log_ei(double mean, double sd, double incumbent);

/// Plug-in noisy incumbent: max posterior mean over the observed inputs.
double incumbent_value(const gp::PosteriorModel& model, const Matrix& observed);

struct AcqResult {
  Matrix points;  // q x d, in the search space
  Vector values;  // log-EI of each pick under the model it was chosen with
};

/// Sequential-greedy batch of q log-EI maximizers. The model consumes raw
/// search-space coordinates; the inner search runs in the unit cube.
AcqResult optimize_acqf(const gp::ModelPtr& model, const Matrix& observed, const SearchSpace& space, int q,
                        const AcqConfig& config = {});

/// E[max(U_a, U_b)] for a bivariate Gaussian.
double eubo(double mean_a, double mean_b, double var_a, double var_b, double cov);
double eubo(const gp::GaussianPosterior& posterior);

enum class PairStrategy { EuboY, EuboX, Random };

PairStrategy parse_pair_strategy(const std::string& text);
std::string to_string(PairStrategy strategy);

struct ScoredPair {
  IndexPair pair;
  double score = 0.0;
};

/// EUBO of every unordered pair of `items`, in lexicographic pair order.
std::vector<ScoredPair> score_all_pairs(const gp::PosteriorModel& model, const Matrix& items);

/// Top-K pairs by EUBO under `model`, or a seeded uniform sample without
/// replacement when the strategy is random or `model` is null. Ties keep
/// lexicographic order.
std::vector<IndexPair> select_top_pairs(const gp::PosteriorModel* model, const Matrix& items, int k,
                                        PairStrategy strategy, std::uint64_t seed);

}  // namespace lilo::acq
