#pragma once

#include "lilo/gp/kernel.hpp"
#include "lilo/gp/posterior.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lilo::gp {

/// Hyperparameter search settings shared by both GP families.
struct FitConfig {
  int restarts = 8;
  int max_iters = 200;
  double grad_tol = 1e-5;
  std::uint64_t seed = 0;
  /// Lower bound on the (standardized) observation noise variance.
  double min_noise = 1e-6;
  /// When set, noise is held fixed at this standardized value instead of fitted.
  std::optional<double> fixed_noise;
};

/// Log-normal hyperpriors: the lengthscale median is 0.5 * sqrt(d) and the
/// signal-variance median is 1.
struct HyperPrior {
  double lengthscale_log_median = 0.0;
  double lengthscale_log_sd = 1.0;
  double output_scale_log_median = 0.0;
  double output_scale_log_sd = 1.0;
  double noise_log_median = -6.9;  // ~1e-3
  double noise_log_sd = 3.0;

  static HyperPrior for_dim(int d);
  /// Log density over the log-parameters (lengthscales, signal variance).
  double log_density(const Vector& log_lengthscales, double log_output_scale) const;
};

/// Multi-start record kept for diagnostics and for checking that the
/// optimizer only ever improves on its starting points.
struct FitReport {
  std::vector<double> start_objectives;
  std::vector<double> final_objectives;
  double best_objective = 0.0;
  int total_iterations = 0;
};

struct RegressionHyperparameters {
  Vector lengthscales;
  double output_scale = 1.0;
  double noise_variance = 1e-2;  // standardized scale
};

/// Exact GP regression on standardized targets with an RBF-ARD kernel.
class RegressionGp final : public PosteriorModel {
 public:
  /// Fits hyperparameters by maximizing log marginal likelihood plus
  /// log hyperprior over `config.restarts` starting points.
  static RegressionGp fit(const Matrix& inputs, const Vector& targets, const FitConfig& config = {},
                          InputScaling scaling = {});

  /// Conditions on data with the given hyperparameters; no optimization.
  RegressionGp(const Matrix& inputs, const Vector& targets, RegressionHyperparameters hyper,
               InputScaling scaling = {});

  int input_dim() const override { return static_cast<int>(inputs_.cols()); }
  GaussianPosterior posterior(const Matrix& queries) const override;
  Vector posterior_mean(const Matrix& queries) const override;
  void marginals(const Matrix& queries, Vector& mean, Vector& variance) const override;

  const RegressionHyperparameters& hyperparameters() const { return hyper_; }
  const FitReport& fit_report() const { return report_; }
  /// Noise variance on the original target scale.
  double noise_variance() const { return hyper_.noise_variance * target_scale_ * target_scale_; }
  double target_mean() const { return target_mean_; }
  double target_scale() const { return target_scale_; }
  int num_train() const { return static_cast<int>(inputs_.rows()); }

  /// Log marginal likelihood of the standardized targets at the current
  /// hyperparameters (no prior term).
  double log_marginal_likelihood() const;

 private:
  RegressionGp() = default;
  void condition();

  Matrix inputs_;       // raw
  Matrix scaled_;       // after InputScaling
  Vector targets_;      // raw
  Vector standardized_;
  double target_mean_ = 0.0;
  double target_scale_ = 1.0;
  InputScaling scaling_;
  RegressionHyperparameters hyper_;
  RbfArdKernel kernel_;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  double jitter_ = 0.0;
  FitReport report_;
};

/// Cholesky with multiplicative jitter escalation 1e-8 -> 1e-4. Returns the
/// jitter used; throws NumericalError when even the largest jitter fails.
double robust_cholesky(const Matrix& a, Eigen::LLT<Matrix>& out);

}  // namespace lilo::gp
