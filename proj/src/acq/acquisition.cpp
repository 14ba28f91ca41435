#include "lilo/acq/acquisition.hpp"

#include "lilo/errors.hpp"
#include "lilo/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace lilo::acq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector log_ei_rows(const gp::PosteriorModel& model, const Matrix& points, double incumbent) {
  Vector mean, var;
  model.marginals(points, mean, var);
  Vector out(points.rows());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = log_ei(mean[i], std::sqrt(var[i]), incumbent);
  return out;
}

// Projected gradient ascent in the unit cube with forward-difference
// gradients. Step length adapts: grow on success, halve on failure.
void ascend(const gp::PosteriorModel& model, const SearchSpace& space, double incumbent, const AcqConfig& cfg,
            Vector& u, double& value) {
  const int d = static_cast<int>(u.size());
  double step = 0.05;
  for (int iter = 0; iter < cfg.max_iters && step > 1e-7; ++iter) {
    Matrix probe(d + 1, d);
    probe.row(0) = u.transpose();
    Vector h(d);
    for (int j = 0; j < d; ++j) {
      Vector v = u;
      h[j] = v[j] + cfg.fd_step <= 1.0 ? cfg.fd_step : -cfg.fd_step;
      v[j] += h[j];
      probe.row(j + 1) = v.transpose();
    }
    const Vector vals = log_ei_rows(model, space.from_unit_rows(probe), incumbent);
    if (!std::isfinite(vals[0])) break;
    Vector grad(d);
    for (int j = 0; j < d; ++j) grad[j] = std::isfinite(vals[j + 1]) ? (vals[j + 1] - vals[0]) / h[j] : 0.0;
    // Drop components pushing against an active bound.
    for (int j = 0; j < d; ++j) {
      if ((u[j] <= 0.0 && grad[j] < 0.0) || (u[j] >= 1.0 && grad[j] > 0.0)) grad[j] = 0.0;
    }
    const double norm = grad.norm();
    if (!(norm > 1e-12)) break;
    bool moved = false;
    while (step > 1e-7) {
      const Vector cand = (u + step * grad / norm).cwiseMax(0.0).cwiseMin(1.0);
      const double cv = log_ei_rows(model, space.from_unit_rows(cand.transpose()), incumbent)[0];
      if (std::isfinite(cv) && cv > value) {
        u = cand;
        value = cv;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
}

}  // namespace

void AcqConfig::validate() const {
  if (restarts < 1) throw ConfigError("acquisition: restarts must be >= 1");
  if (raw_samples < restarts) throw ConfigError("acquisition: raw_samples must be >= restarts");
  if (max_iters < 0) throw ConfigError("acquisition: max_iters must be >= 0");
  if (!(fd_step > 0.0 && fd_step < 0.5)) throw ConfigError("acquisition: fd_step must be in (0, 0.5)");
}

double log_ei(double mean, double sd, double incumbent) {
  if (!(sd >= 0.0)) throw InputError("log_ei: negative or NaN standard deviation");
  const double diff = mean - incumbent;
  if (sd == 0.0 || sd < 1e-300) return diff > 0.0 ? std::log(diff) : kNegInf;
  return std::log(sd) + math::log_h(diff / sd);
}

double incumbent_value(const gp::PosteriorModel& model, const Matrix& observed) {
  if (observed.rows() < 1) throw InputError("incumbent: no observed points");
  return model.posterior_mean(observed).maxCoeff();
}

AcqResult optimize_acqf(const gp::ModelPtr& model, const Matrix& observed, const SearchSpace& space, int q,
                        const AcqConfig& config) {
  if (q < 1) throw InputError("optimize_acqf: q must be >= 1");
  if (!model) throw InputError("optimize_acqf: null model");
  if (model->input_dim() != space.dim()) throw InputError("optimize_acqf: model and space dimensions differ");
  config.validate();
  const int d = space.dim();
  double incumbent = incumbent_value(*model, observed);

  AcqResult result;
  result.points.resize(q, d);
  result.values.resize(q);
  gp::ModelPtr current = model;
  for (int pick = 0; pick < q; ++pick) {
    const Matrix raw = scrambled_sobol(config.raw_samples, d, config.seed + 7919ULL * static_cast<std::uint64_t>(pick));
    const Vector raw_vals = log_ei_rows(*current, space.from_unit_rows(raw), incumbent);
    std::vector<int> order(raw.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = std::isfinite(raw_vals[a]) ? raw_vals[a] : kNegInf;
      const double vb = std::isfinite(raw_vals[b]) ? raw_vals[b] : kNegInf;
      return va > vb;
    });

    Vector best_u = raw.row(order[0]).transpose();
    double best_val = raw_vals[order[0]];
    for (int r = 0; r < config.restarts; ++r) {
      Vector u = raw.row(order[r]).transpose();
      double val = raw_vals[order[r]];
      ascend(*current, space, incumbent, config, u, val);
      if (val > best_val || (r == 0 && !(best_val > kNegInf))) {
        best_val = val;
        best_u = u;
      }
    }
    const Vector x = space.clamp(space.from_unit(best_u));
    result.points.row(pick) = x.transpose();
    result.values[pick] = best_val;

    if (pick + 1 < q) {
      const Matrix pending = result.points.topRows(pick + 1);
      incumbent = std::max(incumbent, model->posterior_mean(x.transpose())[0]);
      current = std::make_shared<gp::BelieverModel>(model, pending, config.believer_noise);
    }
  }
  return result;
}

double eubo(double mean_a, double mean_b, double var_a, double var_b, double cov) {
  double s2 = var_a + var_b - 2.0 * cov;
  if (s2 < -1e-10) throw NumericalError("eubo: negative difference variance");
  s2 = std::max(0.0, s2);
  const double s = std::sqrt(s2);
  if (s < 1e-12) return std::max(mean_a, mean_b);
  const double z = (mean_a - mean_b) / s;
  return mean_a * math::norm_cdf(z) + mean_b * math::norm_cdf(-z) + s * math::norm_pdf(z);
}

double eubo(const gp::GaussianPosterior& posterior) {
  if (posterior.mean.size() != 2 || posterior.covariance.rows() != 2 || posterior.covariance.cols() != 2) {
    throw InputError("eubo: posterior must cover exactly two points");
  }
  const Matrix& c = posterior.covariance;
  return eubo(posterior.mean[0], posterior.mean[1], c(0, 0), c(1, 1), 0.5 * (c(0, 1) + c(1, 0)));
}

PairStrategy parse_pair_strategy(const std::string& text) {
  if (text == "eubo-y") return PairStrategy::EuboY;
  if (text == "eubo-x") return PairStrategy::EuboX;
  if (text == "random") return PairStrategy::Random;
  throw ConfigError("unknown pair strategy '" + text + "' (expected eubo-y, eubo-x or random)");
}

std::string to_string(PairStrategy strategy) {
  switch (strategy) {
    case PairStrategy::EuboY: return "eubo-y";
    case PairStrategy::EuboX: return "eubo-x";
    case PairStrategy::Random: return "random";
  }
  return "random";
}

std::vector<ScoredPair> score_all_pairs(const gp::PosteriorModel& model, const Matrix& items) {
  if (items.rows() < 2) throw InputError("pair scoring: need at least two items");
  const gp::GaussianPosterior post = model.posterior(items);
  std::vector<ScoredPair> out;
  for (const IndexPair& p : all_pairs(static_cast<int>(items.rows()))) {
    const Matrix& c = post.covariance;
    out.push_back({p, eubo(post.mean[p.first], post.mean[p.second], c(p.first, p.first), c(p.second, p.second),
                           c(p.first, p.second))});
  }
  return out;
}

std::vector<IndexPair> select_top_pairs(const gp::PosteriorModel* model, const Matrix& items, int k,
                                        PairStrategy strategy, std::uint64_t seed) {
  if (k < 1) throw InputError("select_top_pairs: K must be >= 1");
  if (items.rows() < 2) throw InputError("select_top_pairs: need at least two items");
  const int m = static_cast<int>(items.rows());
  std::vector<IndexPair> pairs = all_pairs(m);
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), pairs.size());
  if (model == nullptr || strategy == PairStrategy::Random) {
    std::mt19937_64 rng(seed);
    // Partial Fisher-Yates; stable across standard libraries.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng() % (pairs.size() - i));
      std::swap(pairs[i], pairs[j]);
    }
    pairs.resize(take);
    return pairs;
  }
  std::vector<ScoredPair> scored = score_all_pairs(*model, items);
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredPair& a, const ScoredPair& b) { return a.score > b.score; });
  std::vector<IndexPair> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(scored[i].pair);
  return out;
}

}  // namespace lilo::acq
