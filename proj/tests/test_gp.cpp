#include "lilo/errors.hpp"
#include "lilo/gp/pairwise_gp.hpp"
#include "lilo/gp/regression_gp.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace lilo;
using namespace lilo::gp;

namespace {

std::vector<Comparison> oracle_comparisons(const Vector& utility, const std::vector<IndexPair>& pairs) {
  std::vector<Comparison> out;
  for (const auto& p : pairs) {
    if (utility[p.first] >= utility[p.second]) out.push_back({p.first, p.second});
    else out.push_back({p.second, p.first});
  }
  return out;
}

Vector quadratic_utility(const Matrix& x) {
  Vector u(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) u[i] = -(x.row(i).array() - 0.3).square().sum();
  return u;
}

}  // namespace

TEST(RegressionGp, SinglePointInterpolatesWithinNoise) {
  const Matrix x = Matrix::Constant(1, 3, 0.5);
  const Vector u = Vector::Constant(1, 0.7);
  const auto gp = RegressionGp::fit(x, u);
  const double sd = std::sqrt(gp.noise_variance());
  const double mean = gp.posterior_mean(x)[0];
  EXPECT_NEAR(mean, 0.7, 3.0 * sd + 1e-12);
}

TEST(RegressionGp, RevertsToPriorFarFromData) {
  std::mt19937_64 rng(3);
  const Matrix x = testutil::uniform_rows(6, 2, rng);
  Vector u(6);
  for (int i = 0; i < 6; ++i) u[i] = std::sin(3.0 * x(i, 0)) + x(i, 1);
  const auto gp = RegressionGp::fit(x, u);
  const Matrix far = Matrix::Constant(1, 2, 1e3);
  const auto post = gp.posterior(far);
  EXPECT_NEAR(post.mean[0], u.mean(), 1e-9);
  const double prior_var = gp.hyperparameters().output_scale * gp.target_scale() * gp.target_scale();
  EXPECT_NEAR(post.covariance(0, 0), prior_var, 1e-9 * prior_var);
}

TEST(RegressionGp, LeaveOneOutOnSine) {
  const int n = 8;
  Matrix x(n, 1);
  Vector u(n);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> noise(0.0, 1e-4);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = (i + 0.5) / n;
    u[i] = std::sin(2.0 * M_PI * x(i, 0)) + noise(rng);
  }
  const auto full = RegressionGp::fit(x, u);
  // Brute-force LOO: condition on the other seven rows at the fitted hyperparameters.
  double sse = 0.0;
  for (int i = 0; i < n; ++i) {
    Matrix xi(n - 1, 1);
    Vector ui(n - 1);
    for (int j = 0, r = 0; j < n; ++j) {
      if (j == i) continue;
      xi(r, 0) = x(j, 0);
      ui[r++] = u[j];
    }
    const auto fitted = RegressionGp::fit(xi, ui);
    const double pred = fitted.posterior_mean(x.row(i))[0];
    sse += (pred - u[i]) * (pred - u[i]);
  }
  EXPECT_LT(std::sqrt(sse / n), 0.1);
  EXPECT_LT((full.posterior_mean(x) - u).cwiseAbs().maxCoeff(), 0.01);
}

TEST(RegressionGp, NoiselessTrainingPointHasNoVariance) {
  std::mt19937_64 rng(5);
  const Matrix x = testutil::uniform_rows(5, 2, rng);
  const Vector u = x.col(0) + x.col(1);
  RegressionHyperparameters h{Vector::Constant(2, 0.5), 1.0, 1e-10};
  const RegressionGp gp(x, u, h);
  const auto post = gp.posterior(x);
  EXPECT_LE(post.covariance.diagonal().maxCoeff(), 1e-8);
}

TEST(RegressionGp, DuplicatedQueriesShareCovariance) {
  std::mt19937_64 rng(6);
  const Matrix x = testutil::uniform_rows(5, 2, rng);
  const Vector u = x.col(0);
  const auto gp = RegressionGp::fit(x, u);
  Matrix q(2, 2);
  q.row(0) << 0.2, 0.9;
  q.row(1) << 0.2, 0.9;
  const auto post = gp.posterior(q);
  EXPECT_DOUBLE_EQ(post.covariance(0, 0), post.covariance(0, 1));
  EXPECT_DOUBLE_EQ(post.covariance(1, 1), post.covariance(0, 1));
}

TEST(RegressionGp, PermutationInvariant) {
  std::mt19937_64 rng(8);
  const Matrix x = testutil::uniform_rows(12, 3, rng);
  const Vector u = quadratic_utility(x);
  const auto a = RegressionGp::fit(x, u);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(12, 3);
  Vector up(12);
  for (int i = 0; i < 12; ++i) {
    xp.row(i) = x.row(perm[i]);
    up[i] = u[perm[i]];
  }
  const auto b = RegressionGp::fit(xp, up);
  const Matrix q = testutil::uniform_rows(7, 3, rng);
  const auto pa = a.posterior(q), pb = b.posterior(q);
  EXPECT_LT((pa.mean - pb.mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((pa.covariance - pb.covariance).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(RegressionGp, OptimizerNeverWorseThanStarts) {
  std::mt19937_64 rng(9);
  const Matrix x = testutil::uniform_rows(15, 4, rng);
  const Vector u = quadratic_utility(x);
  const auto gp = RegressionGp::fit(x, u);
  const auto& rep = gp.fit_report();
  ASSERT_EQ(rep.start_objectives.size(), 8u);
  for (std::size_t i = 0; i < rep.start_objectives.size(); ++i) {
    EXPECT_GE(rep.final_objectives[i], rep.start_objectives[i]);
    EXPECT_GE(rep.best_objective, rep.start_objectives[i]);
  }
}

TEST(RegressionGp, RejectsBadInput) {
  Matrix x = Matrix::Zero(2, 2);
  Vector u(2);
  u << 1.0, std::nan("");
  EXPECT_THROW(RegressionGp::fit(x, u), InputError);
  u << 1.0, 2.0;
  x(1, 1) = 0.5;
  const auto gp = RegressionGp::fit(x, u);
  EXPECT_THROW(gp.posterior(Matrix::Zero(1, 3)), InputError);
  EXPECT_THROW(gp.posterior(Matrix::Zero(0, 2)), InputError);
}

TEST(PairwiseGp, SingleComparisonOrdersItems) {
  Matrix items(2, 2);
  items << 0.1, 0.2, 0.8, 0.7;
  const auto gp = PairwiseGp::fit(items, {{0, 1}});
  const Vector m = gp.posterior_mean(items);
  EXPECT_GT(m[0], m[1]);
}

TEST(PairwiseGp, FlippingLabelsReversesOrder) {
  std::mt19937_64 rng(12);
  const Matrix items = testutil::uniform_rows(8, 2, rng);
  const Vector u = quadratic_utility(items);
  auto comps = oracle_comparisons(u, all_pairs(8));
  const auto a = PairwiseGp::fit(items, comps);
  for (auto& c : comps) std::swap(c.winner, c.loser);
  const auto b = PairwiseGp::fit(items, comps);
  const Vector ma = a.posterior_mean(items), mb = b.posterior_mean(items);
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) EXPECT_LT((ma[i] - ma[j]) * (mb[i] - mb[j]), 0.0);
}

TEST(PairwiseGp, NoiselessLineRecoversTotalOrder) {
  Matrix items(10, 1);
  Vector truth(10);
  for (int i = 0; i < 10; ++i) {
    items(i, 0) = i / 9.0;
    truth[i] = items(i, 0);
  }
  const auto comps = oracle_comparisons(truth, all_pairs(10));
  ASSERT_EQ(comps.size(), 45u);
  const auto gp = PairwiseGp::fit(items, comps);
  EXPECT_DOUBLE_EQ(testutil::kendall_tau(gp.posterior_mean(items), truth), 1.0);
}

TEST(PairwiseGp, ModeIsStationaryAndHessianPositiveDefinite) {
  std::mt19937_64 rng(13);
  const Matrix items = testutil::uniform_rows(12, 3, rng);
  const Vector u = quadratic_utility(items);
  const auto gp = PairwiseGp::fit(items, oracle_comparisons(u, all_pairs(12)));
  EXPECT_LE(gp.mode_gradient_norm(), 1e-6);
  const Matrix h = gp.laplace_hessian();
  EXPECT_LT((h - h.transpose()).cwiseAbs().maxCoeff(), 1e-8 * h.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (h + h.transpose()));
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(PairwiseGp, EvidenceGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(14);
  const Matrix items = testutil::uniform_rows(9, 2, rng);
  const Vector u = quadratic_utility(items);
  auto pairs = all_pairs(9);
  std::vector<IndexPair> some(pairs.begin(), pairs.begin() + 20);
  auto comps = oracle_comparisons(u, some);
  comps.push_back(comps.front());
  comps.push_back({comps[3].loser, comps[3].winner});
  Vector theta(3);
  theta << std::log(0.4), std::log(0.9), std::log(1.7);
  auto eval = [&](const Vector& t) {
    return PairwiseGp::evidence(items, comps, RbfArdKernel(t.head(2).array().exp(), std::exp(t[2])),
                                {200, 1e-12});
  };
  const auto base = eval(theta);
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-5;
    Vector tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    const double fd = (eval(tp).value - eval(tm).value) / (2 * h);
    EXPECT_NEAR(base.gradient[j], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "parameter " << j;
  }
}

TEST(PairwiseGp, PermutationInvariant) {
  std::mt19937_64 rng(15);
  const Matrix items = testutil::uniform_rows(10, 2, rng);
  const Vector u = quadratic_utility(items);
  auto pairs = all_pairs(10);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(25);
  const auto comps = oracle_comparisons(u, pairs);
  const auto a = PairwiseGp::fit(items, comps);

  std::vector<int> perm(10);  // new row i holds old row perm[i]
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> where(10);
  Matrix permuted(10, 2);
  for (int i = 0; i < 10; ++i) {
    permuted.row(i) = items.row(perm[i]);
    where[perm[i]] = i;
  }
  std::vector<Comparison> reindexed;
  for (auto it = comps.rbegin(); it != comps.rend(); ++it) reindexed.push_back({where[it->winner], where[it->loser]});
  const auto b = PairwiseGp::fit(permuted, reindexed);
  const Matrix q = testutil::uniform_rows(6, 2, rng);
  const auto pa = a.posterior(q), pb = b.posterior(q);
  EXPECT_LT((pa.mean - pb.mean).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((pa.covariance - pb.covariance).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PairwiseGp, PositiveUtilityScalingKeepsRanking) {
  std::mt19937_64 rng(16);
  const Matrix items = testutil::uniform_rows(10, 2, rng);
  const Vector u = quadratic_utility(items);
  auto pairs = all_pairs(10);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(30);
  const auto a = PairwiseGp::fit(items, oracle_comparisons(u, pairs));
  const auto b = PairwiseGp::fit(items, oracle_comparisons((7.5 * u).array() + 3.0, pairs));
  const Vector ma = a.posterior_mean(items), mb = b.posterior_mean(items);
  EXPECT_DOUBLE_EQ(testutil::kendall_tau(ma, mb), 1.0);
}

TEST(PairwiseGp, DuplicateComparisonWidensGap) {
  std::mt19937_64 rng(17);
  const Matrix items = testutil::uniform_rows(6, 2, rng);
  const Vector u = quadratic_utility(items);
  auto comps = oracle_comparisons(u, all_pairs(6));
  const RbfArdKernel kernel(Vector::Constant(2, 0.4), 1.0);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const PairwiseGp before(items, comps, kernel);
    auto more = comps;
    more.push_back(comps[c]);
    const PairwiseGp after(items, more, kernel);
    const Vector mb = before.laplace_mode(), ma = after.laplace_mode();
    EXPECT_GE(ma[comps[c].winner] - ma[comps[c].loser], mb[comps[c].winner] - mb[comps[c].loser] - 1e-12);
  }
}

TEST(PairwiseGp, RejectsBadComparisons) {
  const Matrix items = Matrix::Identity(3, 2);
  EXPECT_THROW(PairwiseGp::fit(items, {{1, 1}}), InputError);
  EXPECT_THROW(PairwiseGp::fit(items, {{0, 3}}), InputError);
  EXPECT_THROW(PairwiseGp::fit(items, {}), InputError);
  EXPECT_THROW(PairwiseGp::fit(Matrix::Zero(1, 2), {{0, 0}}), InputError);
}

TEST(PairwiseGp, AggregatesRepeatedVotes) {
  const auto wc = aggregate_comparisons({{0, 1}, {1, 0}, {0, 1}, {2, 1}}, 3);
  ASSERT_EQ(wc.rows.size(), 3u);
  EXPECT_EQ(wc.rows[0], (Comparison{0, 1}));
  EXPECT_EQ(wc.counts[0], 2.0);
}
