#include "lilo/gp/pairwise_gp.hpp"

#include "canonical.hpp"
#include "lbfgs.hpp"
#include "lilo/errors.hpp"
#include "lilo/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <sstream>

namespace lilo::gp {

namespace {

constexpr double kJitter = 1e-8;
constexpr double kMinLogLengthscale = -4.6;
constexpr double kMaxLogLengthscale = 4.6;
constexpr double kMinLogOutput = -4.6;
constexpr double kMaxLogOutput = 6.9;

// Second derivative helpers of r(z) = phi(z)/Phi(z).
struct ProbitTerms {
  double log_cdf;
  double r;
  double dr;   // r'
  double d2r;  // r''
};

ProbitTerms probit_terms(double z) {
  ProbitTerms t{};
  t.log_cdf = math::log_norm_cdf(z);
  t.r = math::inv_mills(z);
  t.dr = -t.r * (z + t.r);
  t.d2r = -t.dr * (z + t.r) - t.r * (1.0 + t.dr);
  return t;
}

// Laplace mode search and the quantities derived from it.
class Laplace {
 public:
  Laplace(const Matrix& k, const WeightedComparisons& wc, int m) : k_(k), wc_(wc), m_(m) {
    const Eigen::Index c = static_cast<Eigen::Index>(wc_.rows.size());
    d_ = Matrix::Zero(c, m_);
    for (Eigen::Index r = 0; r < c; ++r) {
      d_(r, wc_.rows[r].winner) += 1.0 / math::kSqrt2;
      d_(r, wc_.rows[r].loser) -= 1.0 / math::kSqrt2;
    }
  }

  void solve(Vector a0, const LaplaceConfig& cfg) {
    a_ = std::move(a0);
    if (a_.size() != m_) a_ = Vector::Zero(m_);
    f_ = k_ * a_;
    evaluate(f_);
    double psi = 0.5 * a_.dot(f_) - loglik_;
    iters_ = 0;
    for (; iters_ < cfg.max_iters; ++iters_) {
      grad_norm_ = (a_ - g_).norm();
      if (grad_norm_ <= cfg.grad_tol) break;
      factor();
      const Vector b = w_times(f_) + g_;
      const Vector a_newton = b - s_.transpose() * b_chol_.solve(s_ * (k_ * b));
      const Vector delta = a_newton - a_;
      double step = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Vector a_try = a_ + step * delta;
        const Vector f_try = k_ * a_try;
        const double ll = loglik_at(f_try);
        const double psi_try = 0.5 * a_try.dot(f_try) - ll;
        if (std::isfinite(psi_try) && psi_try <= psi + 1e-12 * std::max(1.0, std::abs(psi))) {
          a_ = a_try;
          f_ = f_try;
          psi = psi_try;
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      evaluate(f_);
      if (!accepted) {
        grad_norm_ = (a_ - g_).norm();
        break;
      }
    }
    grad_norm_ = (a_ - g_).norm();
    if (grad_norm_ > cfg.grad_tol) {
      std::ostringstream msg;
      msg << "pairwise GP: Laplace mode search did not converge after " << iters_
          << " Newton iterations (gradient norm " << grad_norm_ << ", tolerance " << cfg.grad_tol << ")";
      throw NumericalError(msg.str());
    }
    factor();
  }

  double log_evidence() const {
    const Matrix& l = b_chol_.matrixLLT();
    return -0.5 * a_.dot(f_) + loglik_ - l.diagonal().array().log().sum();
  }

  // S^T B^-1 S
  Matrix correction() const { return s_.transpose() * b_chol_.solve(s_); }

  Vector evidence_gradient(const std::vector<Matrix>& dk) const {
    const Matrix r = correction();
    const Matrix c = k_ - k_ * r * k_;
    const Eigen::Index nc = d_.rows();
    Vector weighted(nc);
    for (Eigen::Index i = 0; i < nc; ++i) {
      const double diag_m = d_.row(i) * c * d_.row(i).transpose();
      weighted[i] = wc_.counts[i] * probit_terms(z_[i]).d2r * diag_m;
    }
    const Vector s2 = 0.5 * d_.transpose() * weighted;
    Vector grad(static_cast<Eigen::Index>(dk.size()));
    for (std::size_t j = 0; j < dk.size(); ++j) {
      const double explicit_term = 0.5 * a_.dot(dk[j] * a_) - 0.5 * r.cwiseProduct(dk[j]).sum();
      const Vector dkg = dk[j] * g_;
      const double implicit_term = s2.dot(dkg - k_ * (r * dkg));
      grad[static_cast<Eigen::Index>(j)] = explicit_term + implicit_term;
    }
    return grad;
  }

  Matrix w() const { return d_.transpose() * lambda_.asDiagonal() * d_; }

  const Vector& a() const { return a_; }
  const Vector& f() const { return f_; }
  double grad_norm() const { return grad_norm_; }
  int iterations() const { return iters_; }

 private:
  double loglik_at(const Vector& f) const {
    const Vector z = d_ * f;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) ll += wc_.counts[i] * math::log_norm_cdf(z[i]);
    return ll;
  }

  void evaluate(const Vector& f) {
    z_ = d_ * f;
    const Eigen::Index nc = z_.size();
    Vector dl(nc);
    lambda_.resize(nc);
    loglik_ = 0.0;
    for (Eigen::Index i = 0; i < nc; ++i) {
      const ProbitTerms t = probit_terms(z_[i]);
      loglik_ += wc_.counts[i] * t.log_cdf;
      dl[i] = wc_.counts[i] * t.r;
      lambda_[i] = std::max(0.0, -wc_.counts[i] * t.dr);
    }
    g_ = d_.transpose() * dl;
  }

  Vector w_times(const Vector& v) const { return d_.transpose() * (lambda_.asDiagonal() * (d_ * v)); }

  // W = S^T S with S as short as possible.
  void factor() {
    if (d_.rows() <= m_) {
      s_ = lambda_.cwiseSqrt().asDiagonal() * d_;
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(w());
      s_ = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
    }
    Matrix b = s_ * k_ * s_.transpose();
    b.diagonal().array() += 1.0;
    b_chol_.compute(b);
    if (b_chol_.info() != Eigen::Success) throw NumericalError("pairwise GP: B matrix not positive definite");
  }

  const Matrix& k_;
  const WeightedComparisons& wc_;
  int m_;
  Matrix d_;
  Vector a_, f_, g_, z_, lambda_;
  Matrix s_;
  Eigen::LLT<Matrix> b_chol_;
  double loglik_ = 0.0;
  double grad_norm_ = 0.0;
  int iters_ = 0;
};

Matrix prior_covariance(const RbfArdKernel& kernel, const Matrix& scaled) {
  Matrix k = kernel.gram(scaled);
  k.diagonal().array() += kJitter * kernel.output_scale();
  return k;
}

void validate(const Matrix& items, const std::vector<Comparison>& comparisons) {
  if (items.rows() < 2) throw InputError("pairwise GP: need at least two items");
  if (comparisons.empty()) throw InputError("pairwise GP: need at least one comparison");
  if (!items.allFinite()) throw InputError("pairwise GP: non-finite item");
  for (const auto& c : comparisons) {
    if (c.winner < 0 || c.loser < 0 || c.winner >= items.rows() || c.loser >= items.rows()) {
      throw InputError("pairwise GP: comparison index out of range");
    }
    if (c.winner == c.loser) throw InputError("pairwise GP: item compared with itself");
  }
}

}  // namespace

WeightedComparisons aggregate_comparisons(const std::vector<Comparison>& comparisons, int num_items) {
  std::map<std::pair<int, int>, int> counts;
  for (const auto& c : comparisons) {
    if (c.winner < 0 || c.loser < 0 || c.winner >= num_items || c.loser >= num_items) {
      throw InputError("comparison index out of range");
    }
    if (c.winner == c.loser) throw InputError("item compared with itself");
    ++counts[{c.winner, c.loser}];
  }
  WeightedComparisons out;
  out.counts.resize(static_cast<Eigen::Index>(counts.size()));
  Eigen::Index i = 0;
  for (const auto& [key, n] : counts) {
    out.rows.push_back({key.first, key.second});
    out.counts[i++] = n;
  }
  return out;
}

PairwiseGp::Evidence PairwiseGp::evidence(const Matrix& scaled_items, const std::vector<Comparison>& comparisons,
                                          const RbfArdKernel& kernel, const LaplaceConfig& laplace) {
  validate(scaled_items, comparisons);
  const int m = static_cast<int>(scaled_items.rows());
  const WeightedComparisons wc = aggregate_comparisons(comparisons, m);
  const Matrix k = prior_covariance(kernel, scaled_items);
  Laplace lp(k, wc, m);
  lp.solve(Vector::Zero(m), laplace);
  std::vector<Matrix> dk = kernel.gram_log_gradients(scaled_items);
  dk.back() = k;
  return {lp.log_evidence(), lp.evidence_gradient(dk)};
}

namespace {

// Canonical item order plus comparisons re-indexed to it.
struct CanonicalData {
  Matrix items;
  std::vector<Comparison> comparisons;
};

CanonicalData canonicalize(const Matrix& items, const std::vector<Comparison>& comparisons) {
  const std::vector<int> order = detail::canonical_row_order(items);
  std::vector<int> position(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i);
  CanonicalData out;
  out.items = detail::take_rows(items, order);
  out.comparisons.reserve(comparisons.size());
  for (const auto& c : comparisons) out.comparisons.push_back({position[c.winner], position[c.loser]});
  return out;
}

}  // namespace

PairwiseGp::PairwiseGp(const Matrix& items, const std::vector<Comparison>& comparisons, RbfArdKernel kernel,
                       InputScaling scaling, const LaplaceConfig& laplace)
    : items_(items), scaling_(std::move(scaling)), kernel_(std::move(kernel)) {
  validate(items, comparisons);
  if (kernel_.dim() != items.cols()) throw InputError("pairwise GP: kernel dimension mismatch");
  const CanonicalData canon = canonicalize(scaling_.apply(items_), comparisons);
  scaled_ = canon.items;
  const int m = static_cast<int>(scaled_.rows());
  const WeightedComparisons wc = aggregate_comparisons(canon.comparisons, m);
  const Matrix k = prior_covariance(kernel_, scaled_);
  Laplace lp(k, wc, m);
  lp.solve(Vector::Zero(m), laplace);
  alpha_ = lp.a();
  r_ = lp.correction();
  w_ = lp.w();
  gradient_norm_ = lp.grad_norm();
  newton_iters_ = lp.iterations();
  log_evidence_ = lp.log_evidence();
  // Report the mode in the caller's item order.
  const std::vector<int> order = detail::canonical_row_order(scaling_.apply(items_));
  mode_.resize(m);
  for (int i = 0; i < m; ++i) mode_[order[i]] = lp.f()[i];
}

PairwiseGp PairwiseGp::fit(const Matrix& items, const std::vector<Comparison>& comparisons, const FitConfig& config,
                           InputScaling scaling, const LaplaceConfig& laplace) {
  validate(items, comparisons);
  const int d = static_cast<int>(items.cols());
  const CanonicalData canon = canonicalize(scaling.apply(items), comparisons);
  const int m = static_cast<int>(canon.items.rows());
  const WeightedComparisons wc = aggregate_comparisons(canon.comparisons, m);
  const HyperPrior prior = HyperPrior::for_dim(d);
  const int np = d + 1;

  Vector warm = Vector::Zero(m);
  auto objective = [&](const Vector& theta, Vector& grad) -> double {
    const RbfArdKernel kernel(theta.head(d).array().exp(), std::exp(theta[d]));
    const Matrix k = prior_covariance(kernel, canon.items);
    Laplace lp(k, wc, m);
    try {
      lp.solve(warm, laplace);
    } catch (const NumericalError&) {
      try {
        lp.solve(Vector::Zero(m), laplace);
      } catch (const NumericalError&) {
        grad.setZero(np);
        return -std::numeric_limits<double>::infinity();
      }
    }
    warm = lp.a();
    std::vector<Matrix> dk = kernel.gram_log_gradients(canon.items);
    dk.back() = k;
    grad = lp.evidence_gradient(dk);
    double value = lp.log_evidence() + prior.log_density(theta.head(d), theta[d]);
    for (int i = 0; i < d; ++i) {
      grad[i] -= (theta[i] - prior.lengthscale_log_median) / (prior.lengthscale_log_sd * prior.lengthscale_log_sd);
    }
    grad[d] -= (theta[d] - prior.output_scale_log_median) / (prior.output_scale_log_sd * prior.output_scale_log_sd);
    return value;
  };

  Vector lower(np), upper(np);
  lower.head(d).setConstant(kMinLogLengthscale);
  upper.head(d).setConstant(kMaxLogLengthscale);
  lower[d] = kMinLogOutput;
  upper[d] = kMaxLogOutput;

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FitReport report;
  Vector best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    Vector theta0(np);
    if (r == 0) {
      theta0.head(d).setConstant(prior.lengthscale_log_median);
      theta0[d] = 0.0;
    } else {
      for (int i = 0; i < d; ++i) theta0[i] = prior.lengthscale_log_median + prior.lengthscale_log_sd * normal(rng);
      theta0[d] = prior.output_scale_log_sd * normal(rng);
    }
    theta0 = theta0.cwiseMax(lower).cwiseMin(upper);
    warm.setZero(m);
    Vector g0;
    report.start_objectives.push_back(objective(theta0, g0));
    const auto res = detail::lbfgs_maximize(objective, theta0, lower, upper, config.max_iters, config.grad_tol);
    report.final_objectives.push_back(res.value);
    report.total_iterations += res.iterations;
    if (res.value > best_value) {
      best_value = res.value;
      best_theta = res.x;
    }
  }
  if (!std::isfinite(best_value)) throw NumericalError("pairwise GP: no restart produced a finite evidence");
  report.best_objective = best_value;

  PairwiseGp model(items, comparisons, RbfArdKernel(best_theta.head(d).array().exp(), std::exp(best_theta[d])),
                   std::move(scaling), laplace);
  model.report_ = std::move(report);
  return model;
}

Matrix PairwiseGp::laplace_hessian() const {
  const Matrix k = prior_covariance(kernel_, scaled_);
  Eigen::LLT<Matrix> llt;
  robust_cholesky(k, llt);
  return llt.solve(Matrix::Identity(k.rows(), k.cols())) + w_;
}

GaussianPosterior PairwiseGp::posterior(const Matrix& queries) const {
  check_queries(queries);
  const Matrix qs = scaling_.apply(queries);
  const Matrix kqx = kernel_.cross(qs, scaled_);
  GaussianPosterior out;
  out.mean = kqx * alpha_;
  Matrix cov = kernel_.gram(qs) - kqx * r_ * kqx.transpose();
  out.covariance = 0.5 * (cov + cov.transpose());
  return out;
}

Vector PairwiseGp::posterior_mean(const Matrix& queries) const {
  check_queries(queries);
  return kernel_.cross(scaling_.apply(queries), scaled_) * alpha_;
}

void PairwiseGp::marginals(const Matrix& queries, Vector& mean, Vector& variance) const {
  check_queries(queries);
  const Matrix kqx = kernel_.cross(scaling_.apply(queries), scaled_);
  mean = kqx * alpha_;
  variance = (kernel_.output_scale() - (kqx * r_).cwiseProduct(kqx).rowwise().sum().array()).cwiseMax(0.0).matrix();
}

}  // namespace lilo::gp
