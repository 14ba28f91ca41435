#include "lilo/gp/posterior.hpp"

#include "lilo/errors.hpp"
#include "lilo/gp/regression_gp.hpp"

namespace lilo::gp {

void PosteriorModel::check_queries(const Matrix& queries) const {
  if (queries.rows() < 1) throw InputError("posterior: need at least one query point");
  if (queries.cols() != input_dim()) {
    throw InputError("posterior: query has " + std::to_string(queries.cols()) + " columns, model expects " +
                     std::to_string(input_dim()));
  }
}

void PosteriorModel::marginals(const Matrix& queries, Vector& mean, Vector& variance) const {
  const GaussianPosterior post = posterior(queries);
  mean = post.mean;
  variance = post.variance();
}

BelieverModel::BelieverModel(ModelPtr base, Matrix pending, double noise_variance)
    : base_(std::move(base)), pending_(std::move(pending)), noise_variance_(noise_variance) {
  if (!base_) throw InputError("believer: null base model");
  if (pending_.cols() != base_->input_dim()) throw InputError("believer: pending dimension mismatch");
}

GaussianPosterior BelieverModel::posterior(const Matrix& queries) const {
  check_queries(queries);
  if (pending_.rows() == 0) return base_->posterior(queries);
  const Eigen::Index q = queries.rows();
  const Eigen::Index p = pending_.rows();
  Matrix joint(q + p, queries.cols());
  joint << queries, pending_;
  const GaussianPosterior full = base_->posterior(joint);

  Matrix cpp = full.covariance.bottomRightCorner(p, p);
  cpp.diagonal().array() += noise_variance_;
  Eigen::LLT<Matrix> llt;
  robust_cholesky(cpp, llt);
  const Matrix cqp = full.covariance.topRightCorner(q, p);
  const Matrix solved = llt.solve(cqp.transpose());

  GaussianPosterior out;
  // Pseudo-observations equal the base mean, so the innovation is zero.
  out.mean = full.mean.head(q);
  out.covariance = full.covariance.topLeftCorner(q, q) - cqp * solved;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

}  // namespace lilo::gp
