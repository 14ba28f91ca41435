#pragma once

#include "lilo/types.hpp"

#include <memory>

namespace lilo::gp {

/// Joint Gaussian over q query points.
struct GaussianPosterior {
  Vector mean;
  Matrix covariance;

  Vector variance() const { return covariance.diagonal().cwiseMax(0.0); }
};

/// Anything that yields a Gaussian posterior over latent utility at query
/// inputs. Implementations are immutable once constructed; concurrent
/// `posterior` calls are safe.
class PosteriorModel {
 public:
  virtual ~PosteriorModel() = default;

  virtual int input_dim() const = 0;
  virtual GaussianPosterior posterior(const Matrix& queries) const = 0;
  virtual Vector posterior_mean(const Matrix& queries) const { return posterior(queries).mean; }
  /// Pointwise means and variances without the joint covariance.
  virtual void marginals(const Matrix& queries, Vector& mean, Vector& variance) const;

 protected:
  void check_queries(const Matrix& queries) const;
};

using ModelPtr = std::shared_ptr<const PosteriorModel>;

/// Kriging-believer view of a base model: the base posterior conditioned on
/// pseudo-observations equal to its own mean at `pending` points. The mean is
/// unchanged and variance collapses around the pending points.
class BelieverModel final : public PosteriorModel {
 public:
  BelieverModel(ModelPtr base, Matrix pending, double noise_variance);

  int input_dim() const override { return base_->input_dim(); }
  GaussianPosterior posterior(const Matrix& queries) const override;
  Vector posterior_mean(const Matrix& queries) const override { return base_->posterior_mean(queries); }

 private:
  ModelPtr base_;
  Matrix pending_;
  double noise_variance_;
};

}  // namespace lilo::gp
