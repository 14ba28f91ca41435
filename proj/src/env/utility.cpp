#include "lilo/env/utility.hpp"

#include "lilo/errors.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>

namespace lilo::env {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

void require_length(const Vector& v, int k, const char* what) {
  if (v.size() != k) throw ConfigError(std::string("utility: ") + what + " must have one entry per outcome");
}

}  // namespace

std::string to_string(UtilityKind kind) {
  switch (kind) {
    case UtilityKind::L1: return "l1";
    case UtilityKind::BetaProducts: return "beta-products";
    case UtilityKind::PiecewiseLinear: return "piecewise-linear";
    case UtilityKind::ThermalDesirability: return "thermal-desirability";
  }
  return "l1";
}

UtilityKind parse_utility_kind(const std::string& text) {
  if (text == "l1") return UtilityKind::L1;
  if (text == "beta-products") return UtilityKind::BetaProducts;
  if (text == "piecewise-linear") return UtilityKind::PiecewiseLinear;
  if (text == "thermal-desirability") return UtilityKind::ThermalDesirability;
  throw ConfigError("unknown utility kind '" + text + "'");
}

void ThermalThresholds::validate() const {
  if (!(ppd_l < ppd_h && dr_l < dr_h && vert_l < vert_h && pr_l < pr_h)) {
    throw ConfigError("thermal thresholds: need L < H for every smaller-is-better metric");
  }
  if (!(floor_min < floor_l && floor_l <= floor_h && floor_h < floor_max)) {
    throw ConfigError("thermal thresholds: need l_min < l <= h < h_max for floor temperature");
  }
  if (!(shape >= 1.0)) throw ConfigError("thermal thresholds: shape must be >= 1");
}

ThermalThresholds thresholds_a() { return {}; }

ThermalThresholds thresholds_b() {
  ThermalThresholds t;
  t.ppd_l = 0.0, t.ppd_h = 24.0;
  t.dr_l = 30.0, t.dr_h = 45.0;
  t.vert_l = 2.5, t.vert_h = 6.0;
  t.pr_l = 4.0, t.pr_h = 12.0;
  t.floor_min = 19.0, t.floor_l = 20.0, t.floor_h = 23.0, t.floor_max = 25.0;
  return t;
}

int UtilitySpec::outcome_dim() const {
  switch (kind) {
    case UtilityKind::L1: return static_cast<int>(y_opt.size());
    case UtilityKind::BetaProducts: return static_cast<int>(alpha.size());
    case UtilityKind::PiecewiseLinear: return static_cast<int>(beta1.size());
    case UtilityKind::ThermalDesirability: return 5;
  }
  return 0;
}

void UtilitySpec::validate() const {
  const int k = outcome_dim();
  switch (kind) {
    case UtilityKind::L1:
      if (k < 1) throw ConfigError("utility: l1 needs y_opt");
      if (!(l1_normalizer > 0.0)) throw ConfigError("utility: l1 normalizer must be positive");
      break;
    case UtilityKind::BetaProducts:
      require_length(beta, k, "beta");
      if ((alpha.array() <= 0.0).any() || (beta.array() <= 0.0).any()) {
        throw ConfigError("utility: beta parameters must be positive");
      }
      break;
    case UtilityKind::PiecewiseLinear:
      require_length(beta2, k, "beta2");
      require_length(t, k, "t");
      if (!(piecewise_max > piecewise_min)) throw ConfigError("utility: empty piecewise normalization range");
      break;
    case UtilityKind::ThermalDesirability:
      thermal.validate();
      break;
  }
}

double d_small(double y, double low, double high, double shape) {
  if (y <= low) return 1.0;
  if (y >= high) return 0.0;
  return std::pow((high - y) / (high - low), shape);
}

double d_band(double t, double low, double high, double low_min, double high_max, double shape) {
  if (t <= low_min || t >= high_max) return 0.0;
  if (t >= low && t <= high) return 1.0;
  if (t < low) return std::pow((t - low_min) / (low - low_min), shape);
  return std::pow((high_max - t) / (high_max - high), shape);
}

double piecewise_raw(const Vector& y, const Vector& beta1, const Vector& beta2, const Vector& t) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    sum += y[i] < t[i] ? beta1[i] * y[i] + (beta2[i] - beta1[i]) * t[i] : beta2[i] * y[i];
  }
  return sum;
}

double utility(const UtilitySpec& spec, const Vector& y) {
  if (!y.allFinite()) throw InputError("utility: non-finite outcome");
  if (y.size() != spec.outcome_dim()) throw ConfigError("utility: outcome dimension does not match the utility");
  switch (spec.kind) {
    case UtilityKind::L1:
      return clamp01(1.0 - (y - spec.y_opt).lpNorm<1>() / spec.l1_normalizer);
    case UtilityKind::BetaProducts: {
      double p = 1.0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        p *= boost::math::ibeta(spec.alpha[i], spec.beta[i], std::clamp(y[i], 0.0, 1.0));
      }
      return clamp01(p);
    }
    case UtilityKind::PiecewiseLinear: {
      const double raw = piecewise_raw(y, spec.beta1, spec.beta2, spec.t);
      return clamp01((raw - spec.piecewise_min) / (spec.piecewise_max - spec.piecewise_min));
    }
    case UtilityKind::ThermalDesirability: {
      const ThermalThresholds& th = spec.thermal;
      const double prod = d_small(y[0], th.ppd_l, th.ppd_h, th.shape) * d_small(y[1], th.dr_l, th.dr_h, th.shape) *
                          d_small(y[2], th.vert_l, th.vert_h, th.shape) * d_small(y[3], th.pr_l, th.pr_h, th.shape) *
                          d_band(y[4], th.floor_l, th.floor_h, th.floor_min, th.floor_max, th.shape);
      return clamp01(std::pow(prod, 0.2));
    }
  }
  return 0.0;
}

}  // namespace lilo::env
