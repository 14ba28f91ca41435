#include "lilo/env/environment.hpp"
#include "lilo/errors.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>

#include <cmath>
#include <random>

using namespace lilo;
using namespace lilo::env;

namespace {

Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out[i++] = x;
  return out;
}

// Direct transcription of the textbook definition, with the sign flipped.
Vector dtlz2_reference(const Vector& x, int k) {
  const int d = static_cast<int>(x.size());
  double g = 0.0;
  for (int i = k - 1; i < d; ++i) g += (x[i] - 0.5) * (x[i] - 0.5);
  Vector f(k);
  for (int j = 0; j < k; ++j) {
    double val = 1.0 + g;
    for (int i = 0; i < k - 1 - j; ++i) val *= std::cos(x[i] * M_PI / 2.0);
    if (j > 0) val *= std::sin(x[k - 1 - j] * M_PI / 2.0);
    f[j] = -val;
  }
  return f;
}

Matrix uniform(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return testutil::uniform_rows(n, d, rng);
}

}  // namespace

TEST(Dtlz2, CenterPoint) {
  const Vector f = dtlz2(Vector::Constant(8, 0.5), 4);
  const double c = std::cos(M_PI / 4.0);
  EXPECT_NEAR(f[0], -c * c * c, 1e-12);
  EXPECT_NEAR(f[1], -c * c * c, 1e-12);
  EXPECT_NEAR(f[2], -c * c, 1e-12);
  EXPECT_NEAR(f[3], -c, 1e-12);
}

TEST(Dtlz2, ZeroInputHasLargeDistance) {
  const Vector f = dtlz2(Vector::Zero(8), 4);
  EXPECT_NEAR(dtlz2_distance(Vector::Zero(8), 4), 1.25, 1e-12);
  EXPECT_NEAR(f[0], -2.25, 1e-12);
  for (int j = 1; j < 4; ++j) EXPECT_NEAR(f[j], 0.0, 1e-12);
}

TEST(Dtlz2, MatchesReferenceAndSphereIdentity) {
  const Matrix xs = uniform(10000, 8, 3);
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const Vector x = xs.row(i).transpose();
    const Vector f = dtlz2(x, 4);
    ASSERT_LE((f - dtlz2_reference(x, 4)).cwiseAbs().maxCoeff(), 1e-12);
    const double h = dtlz2_distance(x, 4);
    ASSERT_NEAR(f.squaredNorm(), (1.0 + h) * (1.0 + h), 1e-10);
  }
}

TEST(Thermal, PpdAtNeutral) {
  EXPECT_DOUBLE_EQ(ppd(0.0), 5.0);
  EXPECT_NEAR(ppd(1.0), 26.1, 0.1);
  EXPECT_NEAR(ppd(-1.0), ppd(1.0), 1e-12);
}

TEST(Thermal, PmvReferenceValues) {
  EXPECT_NEAR(pmv(22.0, 22.0, 0.1, 60.0, 1.2, 0.5), -0.75, 0.05);
  EXPECT_NEAR(pmv(27.0, 27.0, 0.1, 60.0, 1.2, 0.5), 0.77, 0.05);
  EXPECT_NEAR(pmv(23.5, 25.5, 0.1, 60.0, 1.2, 0.5), -0.01, 0.05);
}

TEST(Thermal, DraughtRate) {
  EXPECT_DOUBLE_EQ(draught_rate(22.0, 0.05, 40.0), 0.0);
  EXPECT_DOUBLE_EQ(draught_rate(35.0, 0.5, 40.0), 0.0);
  const double dr = draught_rate(20.0, 0.2, 40.0);
  const double expect = (34.0 - 20.0) * std::pow(0.2 - 0.05, 0.62) * (0.37 * 0.2 * 40.0 + 3.14);
  EXPECT_NEAR(dr, expect, 1e-9);
  EXPECT_LE(draught_rate(10.0, 5.0, 100.0), 100.0);
}

TEST(Thermal, OutcomesRejectOutOfBounds) {
  const SearchSpace space = thermal_space();
  Vector x = (space.lower() + space.upper()) / 2.0;
  EXPECT_EQ(thermal_outcomes(x, persona_a()).size(), 5);
  x[0] = space.upper()[0] + 1.0;
  EXPECT_THROW(thermal_outcomes(x, persona_a()), InputError);
}

TEST(Utility, L1) {
  UtilitySpec u;
  u.y_opt = v({0.8, 1.0, 0.7, 1.25});
  u.l1_normalizer = 4.0;
  EXPECT_DOUBLE_EQ(utility(u, u.y_opt), 1.0);
  EXPECT_DOUBLE_EQ(utility(u, u.y_opt + v({1.0, 0.0, -1.0, 0.0})), 0.5);
  EXPECT_DOUBLE_EQ(utility(u, u.y_opt + Vector::Constant(4, 10.0)), 0.0);
}

TEST(Utility, BetaProducts) {
  UtilitySpec u;
  u.kind = UtilityKind::BetaProducts;
  u.alpha = v({0.5});
  u.beta = v({0.5});
  EXPECT_NEAR(utility(u, v({0.5})), 0.5, 1e-12);
  u.alpha = v({2.0});
  u.beta = v({1.0});
  EXPECT_NEAR(utility(u, v({0.6})), 0.36, 1e-12);
  EXPECT_DOUBLE_EQ(utility(u, v({-3.0})), 0.0);
  EXPECT_DOUBLE_EQ(utility(u, v({3.0})), 1.0);

  u.alpha = v({0.5, 2.0, 2.0, 2.0});
  u.beta = v({0.5, 1.0, 2.0, 5.0});
  const Vector y = v({0.3, 0.4, 0.5, 0.6});
  double expect = 1.0;
  for (int i = 0; i < 4; ++i) expect *= boost::math::cdf(boost::math::beta_distribution<>(u.alpha[i], u.beta[i]), y[i]);
  EXPECT_NEAR(utility(u, y), expect, 1e-12);
}

TEST(Utility, PiecewiseContinuity) {
  const Vector b1 = v({4.0, 3.0, 2.0, 1.0}), b2 = v({0.4, 0.3, 0.2, 0.1}), t = v({1.0, 0.8, 0.5, 0.5});
  for (int i = 0; i < 4; ++i) {
    Vector below = t, above = t;
    below[i] -= 1e-9;
    above[i] += 1e-9;
    EXPECT_NEAR(piecewise_raw(below, b1, b2, t), piecewise_raw(above, b1, b2, t), 1e-8);
    Vector one(1), lo(1), hi(1);
    one << t[i];
    lo << t[i] - 1e-9;
    hi << t[i] + 1e-9;
    const Vector b1i = b1.segment(i, 1), b2i = b2.segment(i, 1);
    EXPECT_NEAR(piecewise_raw(lo, b1i, b2i, one), b2[i] * t[i], 1e-8);
    EXPECT_NEAR(piecewise_raw(hi, b1i, b2i, one), b2[i] * t[i], 1e-8);
  }
  Vector y = t;
  y[0] -= 0.5;
  EXPECT_NEAR(piecewise_raw(y, b1, b2, t) - piecewise_raw(t, b1, b2, t), -4.0 * 0.5, 1e-12);
  y = t;
  y[0] += 0.5;
  EXPECT_NEAR(piecewise_raw(y, b1, b2, t) - piecewise_raw(t, b1, b2, t), 0.4 * 0.5, 1e-12);
}

TEST(Utility, ThermalDesirabilityBoundaries) {
  const ThermalThresholds th = thresholds_a();
  EXPECT_DOUBLE_EQ(d_small(th.ppd_l, th.ppd_l, th.ppd_h, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(d_small(th.ppd_h, th.ppd_l, th.ppd_h, 1.0), 0.0);
  EXPECT_NEAR(d_small(15.0, 0.0, 30.0, 1.0), 0.5, 1e-12);
  EXPECT_NEAR(d_small(15.0, 0.0, 30.0, 2.0), 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(d_band(22.0, 19.0, 26.0, 16.0, 30.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(d_band(16.0, 19.0, 26.0, 16.0, 30.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(d_band(30.0, 19.0, 26.0, 16.0, 30.0, 1.0), 0.0);
  EXPECT_NEAR(d_band(17.5, 19.0, 26.0, 16.0, 30.0, 1.0), 0.5, 1e-12);

  UtilitySpec u;
  u.kind = UtilityKind::ThermalDesirability;
  EXPECT_DOUBLE_EQ(utility(u, v({0.0, 0.0, 0.0, 0.0, 22.0})), 1.0);
  EXPECT_DOUBLE_EQ(utility(u, v({30.0, 0.0, 0.0, 0.0, 22.0})), 0.0);
  const double expect = std::pow(0.5, 0.2);
  EXPECT_NEAR(utility(u, v({15.0, 0.0, 0.0, 0.0, 22.0})), expect, 1e-12);
}

TEST(Utility, AllRegisteredUtilitiesInUnitInterval) {
  for (const auto& id : registry_ids()) {
    const auto env = make_environment(id);
    const auto& b = env->outcome_bounds();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 100000; ++i) {
      Vector y(env->outcome_dim());
      for (Eigen::Index j = 0; j < y.size(); ++j) y[j] = b.lower[j] + unif(rng) * (b.upper[j] - b.lower[j]);
      const double u = env->utility(y);
      ASSERT_TRUE(u >= 0.0 && u <= 1.0) << id << " " << u;
    }
  }
}

TEST(Utility, PiecewiseMonotoneInEachOutcome) {
  const auto env = make_environment("dtlz2-piecewise");
  const Matrix ys = uniform(500, 4, 9);
  for (Eigen::Index i = 0; i < ys.rows(); ++i) {
    for (int j = 0; j < 4; ++j) {
      Vector a = ys.row(i).transpose(), b = a;
      b[j] += 0.01;
      ASSERT_LE(env->utility(a), env->utility(b) + 1e-15);
    }
  }
}

TEST(Oracle, TieAndAntisymmetry) {
  const auto env = make_environment("dtlz2-l1");
  const Vector y = env->evaluate(Vector::Constant(8, 0.3));
  EXPECT_EQ(oracle_pairwise(*env, y, y), 0);
  const Vector z = env->evaluate(Vector::Constant(8, 0.7));
  ASSERT_NE(env->utility(y), env->utility(z));
  EXPECT_NE(oracle_pairwise(*env, y, z), oracle_pairwise(*env, z, y));
}

TEST(Environment, SeedMessages) {
  EXPECT_EQ(make_environment("dtlz2-l1")->seed_message(),
            "My goal is to bring all the outcome metrics as close to [0.8, 1.0, 0.7, 1.25] as possible.");
  EXPECT_NE(make_environment("dtlz2-piecewise")->seed_message().find("y_1 >= 1.0, y_2 >= 0.8"), std::string::npos);
  EXPECT_EQ(make_environment("thermal-a")->seed_message(),
            "My goal is to keep all metrics within my thermal comfort preferences.");
}

TEST(Environment, RegistryAndErrors) {
  EXPECT_EQ(registry_ids().size(), 5u);
  EXPECT_THROW(make_environment("nope"), NotFoundError);
  const auto env = make_environment("dtlz2-beta");
  EXPECT_THROW(env->evaluate(Vector::Zero(3)), InputError);
  const auto j = env->to_json();
  EXPECT_EQ(j["utility"]["kind"], "beta-products");
  EXPECT_EQ(j["outcome_lower"].size(), 4u);
}

TEST(Environment, NormalizedOutcomesInsideFrozenBounds) {
  const auto env = make_environment("dtlz2-l1");
  const Matrix xs = uniform(2000, 8, 5);
  const Matrix ys = env->evaluate_rows(xs);
  EXPECT_GE(ys.minCoeff(), -0.05);
  EXPECT_LE(ys.maxCoeff(), 1.05);
}

TEST(Environment, PyFloat) {
  EXPECT_EQ(py_float(1.0), "1.0");
  EXPECT_EQ(py_float(0.8), "0.8");
  EXPECT_EQ(py_float(1.25), "1.25");
  EXPECT_EQ(py_list(v({0.8, 1.0})), "[0.8, 1.0]");
}
