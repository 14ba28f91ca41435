#pragma once

#include "lilo/gp/kernel.hpp"
#include "lilo/gp/posterior.hpp"
#include "lilo/gp/regression_gp.hpp"

#include <vector>

namespace lilo::gp {

struct LaplaceConfig {
  int max_iters = 100;
  double grad_tol = 1e-6;
};

/// Probit preference GP (Chu & Ghahramani) with a Laplace approximation.
/// Likelihood of a comparison w > l is Phi((f_w - f_l) / sqrt(2)); the
/// probit noise scale is fixed at 1. Repeated comparisons are kept as
/// multiplicities, so replicate votes sharpen the likelihood.
class PairwiseGp final : public PosteriorModel {
 public:
  static PairwiseGp fit(const Matrix& items, const std::vector<Comparison>& comparisons,
                        const FitConfig& config = {}, InputScaling scaling = {},
                        const LaplaceConfig& laplace = {});

  /// Laplace fit at fixed kernel hyperparameters.
  PairwiseGp(const Matrix& items, const std::vector<Comparison>& comparisons, RbfArdKernel kernel,
             InputScaling scaling = {}, const LaplaceConfig& laplace = {});

  int input_dim() const override { return static_cast<int>(items_.cols()); }
  GaussianPosterior posterior(const Matrix& queries) const override;
  Vector posterior_mean(const Matrix& queries) const override;
  void marginals(const Matrix& queries, Vector& mean, Vector& variance) const override;

  const Matrix& items() const { return items_; }
  const RbfArdKernel& kernel() const { return kernel_; }
  const Vector& laplace_mode() const { return mode_; }
  /// Negative Hessian of the log posterior at the mode: K^-1 + W.
  Matrix laplace_hessian() const;
  /// Gradient norm of the penalized log-likelihood at the stored mode.
  double mode_gradient_norm() const { return gradient_norm_; }
  int newton_iterations() const { return newton_iters_; }
  double log_evidence() const { return log_evidence_; }
  const FitReport& fit_report() const { return report_; }

  /// Laplace log evidence and its gradient in (log lengthscales,
  /// log output_scale). Exposed for gradient checks.
  struct Evidence {
    double value = 0.0;
    Vector gradient;
  };
  static Evidence evidence(const Matrix& scaled_items, const std::vector<Comparison>& comparisons,
                           const RbfArdKernel& kernel, const LaplaceConfig& laplace = {});

 private:
  PairwiseGp() = default;

  Matrix items_;
  Matrix scaled_;
  InputScaling scaling_;
  RbfArdKernel kernel_;
  Vector alpha_;  // K^-1 f at the mode
  Vector mode_;
  Matrix r_;      // S^T B^-1 S, predictive correction
  Matrix w_;
  double gradient_norm_ = 0.0;
  double log_evidence_ = 0.0;
  int newton_iters_ = 0;
  FitReport report_;
};

/// Distinct (winner, loser) rows with multiplicities.
struct WeightedComparisons {
  std::vector<Comparison> rows;
  Vector counts;
};
WeightedComparisons aggregate_comparisons(const std::vector<Comparison>& comparisons, int num_items);

}  // namespace lilo::gp
