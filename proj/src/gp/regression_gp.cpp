#include "lilo/gp/regression_gp.hpp"

#include "canonical.hpp"
#include "lbfgs.hpp"
#include "lilo/errors.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace lilo::gp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kMinLogLengthscale = -4.6;  // 0.01
constexpr double kMaxLogLengthscale = 4.6;   // 100
constexpr double kMinLogOutput = -6.9;
constexpr double kMaxLogOutput = 6.9;
constexpr double kMinLogNoiseExcess = -20.0;
constexpr double kMaxLogNoiseExcess = 2.3;

double normal_log_density(double x, double median, double sd) {
  const double z = (x - median) / sd;
  return -0.5 * z * z;
}

}  // namespace

double robust_cholesky(const Matrix& a, Eigen::LLT<Matrix>& out) {
  out.compute(a);
  if (out.info() == Eigen::Success) return 0.0;
  for (double jitter = 1e-8; jitter <= 1e-4 * 1.0000001; jitter *= 10.0) {
    Matrix b = a;
    b.diagonal().array() += jitter;
    out.compute(b);
    if (out.info() == Eigen::Success) return jitter;
  }
  throw NumericalError("cholesky failed after jitter escalation to 1e-4");
}

HyperPrior HyperPrior::for_dim(int d) {
  HyperPrior p;
  p.lengthscale_log_median = std::log(0.5 * std::sqrt(static_cast<double>(d)));
  return p;
}

double HyperPrior::log_density(const Vector& log_lengthscales, double log_output_scale) const {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < log_lengthscales.size(); ++i) {
    lp += normal_log_density(log_lengthscales[i], lengthscale_log_median, lengthscale_log_sd);
  }
  lp += normal_log_density(log_output_scale, output_scale_log_median, output_scale_log_sd);
  return lp;
}

RegressionGp::RegressionGp(const Matrix& inputs, const Vector& targets, RegressionHyperparameters hyper,
                           InputScaling scaling)
    : scaling_(std::move(scaling)), hyper_(std::move(hyper)) {
  if (inputs.rows() < 1) throw InputError("regression GP: need at least one training point");
  if (inputs.rows() != targets.size()) throw InputError("regression GP: inputs and targets differ in length");
  if (!targets.allFinite()) throw InputError("regression GP: non-finite target");
  if (!inputs.allFinite()) throw InputError("regression GP: non-finite input");
  const std::vector<int> order = detail::canonical_row_order(inputs, &targets);
  inputs_ = detail::take_rows(inputs, order);
  targets_ = detail::take(targets, order);
  scaled_ = scaling_.apply(inputs_);
  target_mean_ = targets_.mean();
  const double var = targets_.size() > 1
                         ? (targets_.array() - target_mean_).square().sum() / static_cast<double>(targets_.size() - 1)
                         : 0.0;
  target_scale_ = var > 1e-24 ? std::sqrt(var) : 1.0;
  standardized_ = (targets_.array() - target_mean_) / target_scale_;
  condition();
}

void RegressionGp::condition() {
  kernel_ = RbfArdKernel(hyper_.lengthscales, hyper_.output_scale);
  Matrix k = kernel_.gram(scaled_);
  k.diagonal().array() += hyper_.noise_variance;
  jitter_ = robust_cholesky(k, chol_);
  alpha_ = chol_.solve(standardized_);
}

double RegressionGp::log_marginal_likelihood() const {
  const Matrix& l = chol_.matrixLLT();
  const double n = static_cast<double>(standardized_.size());
  return -0.5 * standardized_.dot(alpha_) - l.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
}

RegressionGp RegressionGp::fit(const Matrix& inputs, const Vector& targets, const FitConfig& config,
                               InputScaling scaling) {
  const int d = static_cast<int>(inputs.cols());
  RegressionHyperparameters start;
  start.lengthscales = Vector::Constant(d, 0.5 * std::sqrt(static_cast<double>(d)));
  start.output_scale = 1.0;
  start.noise_variance = config.fixed_noise.value_or(1e-2);
  RegressionGp model(inputs, targets, start, std::move(scaling));

  const HyperPrior prior = HyperPrior::for_dim(d);
  const bool fit_noise = !config.fixed_noise.has_value();
  const int np = d + 1 + (fit_noise ? 1 : 0);
  const Matrix& x = model.scaled_;
  const Vector& z = model.standardized_;
  const Eigen::Index n = x.rows();
  const double min_noise = config.min_noise;

  auto unpack = [&](const Vector& theta) {
    RegressionHyperparameters h;
    h.lengthscales = theta.head(d).array().exp();
    h.output_scale = std::exp(theta[d]);
    h.noise_variance = fit_noise ? min_noise + std::exp(theta[d + 1]) : *config.fixed_noise;
    return h;
  };

  auto objective = [&](const Vector& theta, Vector& grad) -> double {
    const RegressionHyperparameters h = unpack(theta);
    const RbfArdKernel kernel(h.lengthscales, h.output_scale);
    Matrix k = kernel.gram(x);
    k.diagonal().array() += h.noise_variance;
    Eigen::LLT<Matrix> llt;
    try {
      robust_cholesky(k, llt);
    } catch (const NumericalError&) {
      grad.setZero(np);
      return -std::numeric_limits<double>::infinity();
    }
    const Vector alpha = llt.solve(z);
    const Matrix& l = llt.matrixLLT();
    double value = -0.5 * z.dot(alpha) - l.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
    const Matrix kinv = llt.solve(Matrix::Identity(n, n));
    const Matrix q = alpha * alpha.transpose() - kinv;
    const std::vector<Matrix> dk = kernel.gram_log_gradients(x);
    grad.resize(np);
    for (int i = 0; i <= d; ++i) grad[i] = 0.5 * q.cwiseProduct(dk[i]).sum();
    if (fit_noise) grad[d + 1] = 0.5 * q.trace() * std::exp(theta[d + 1]);

    value += prior.log_density(theta.head(d), theta[d]);
    for (int i = 0; i < d; ++i) {
      grad[i] -= (theta[i] - prior.lengthscale_log_median) / (prior.lengthscale_log_sd * prior.lengthscale_log_sd);
    }
    grad[d] -= (theta[d] - prior.output_scale_log_median) / (prior.output_scale_log_sd * prior.output_scale_log_sd);
    if (fit_noise) {
      const double noise = h.noise_variance;
      const double log_noise = std::log(noise);
      const double zn = (log_noise - prior.noise_log_median) / prior.noise_log_sd;
      value += -0.5 * zn * zn;
      // d log(noise)/d theta = exp(theta)/noise
      grad[d + 1] -= zn / prior.noise_log_sd * std::exp(theta[d + 1]) / noise;
    }
    return value;
  };

  Vector lower(np), upper(np);
  lower.head(d).setConstant(kMinLogLengthscale);
  upper.head(d).setConstant(kMaxLogLengthscale);
  lower[d] = kMinLogOutput;
  upper[d] = kMaxLogOutput;
  if (fit_noise) {
    lower[d + 1] = kMinLogNoiseExcess;
    upper[d + 1] = kMaxLogNoiseExcess;
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  FitReport report;
  Vector best_theta;
  double best_value = -std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, config.restarts);
  for (int r = 0; r < restarts; ++r) {
    Vector theta0(np);
    if (r == 0) {
      theta0.head(d).setConstant(prior.lengthscale_log_median);
      theta0[d] = 0.0;
      if (fit_noise) theta0[d + 1] = std::log(1e-2);
    } else {
      for (int i = 0; i < d; ++i) theta0[i] = prior.lengthscale_log_median + prior.lengthscale_log_sd * normal(rng);
      theta0[d] = prior.output_scale_log_sd * normal(rng);
      if (fit_noise) theta0[d + 1] = std::log(1e-6) + uniform(rng) * (std::log(1e-1) - std::log(1e-6));
    }
    theta0 = theta0.cwiseMax(lower).cwiseMin(upper);
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
  if (!std::isfinite(best_value)) throw NumericalError("regression GP: no restart produced a finite objective");
  report.best_objective = best_value;

  model.hyper_ = unpack(best_theta);
  model.condition();
  model.report_ = std::move(report);
  return model;
}

GaussianPosterior RegressionGp::posterior(const Matrix& queries) const {
  check_queries(queries);
  const Matrix qs = scaling_.apply(queries);
  const Matrix kqx = kernel_.cross(qs, scaled_);
  GaussianPosterior out;
  out.mean = (kqx * alpha_).array() * target_scale_ + target_mean_;
  const Matrix v = chol_.matrixL().solve(kqx.transpose());
  Matrix cov = kernel_.gram(qs) - v.transpose() * v;
  cov = 0.5 * (cov + cov.transpose());
  out.covariance = cov * (target_scale_ * target_scale_);
  return out;
}

Vector RegressionGp::posterior_mean(const Matrix& queries) const {
  check_queries(queries);
  const Matrix kqx = kernel_.cross(scaling_.apply(queries), scaled_);
  return (kqx * alpha_).array() * target_scale_ + target_mean_;
}

void RegressionGp::marginals(const Matrix& queries, Vector& mean, Vector& variance) const {
  check_queries(queries);
  const Matrix kqx = kernel_.cross(scaling_.apply(queries), scaled_);
  mean = (kqx * alpha_).array() * target_scale_ + target_mean_;
  const Matrix v = chol_.matrixL().solve(kqx.transpose());
  variance = ((kernel_.output_scale() - v.colwise().squaredNorm().transpose().array()).cwiseMax(0.0) *
              (target_scale_ * target_scale_))
                 .matrix();
}

}  // namespace lilo::gp
