#pragma once

#include "lilo/types.hpp"

#include <string>

namespace lilo::env {

enum class UtilityKind { L1, BetaProducts, PiecewiseLinear, ThermalDesirability };

std::string to_string(UtilityKind kind);
UtilityKind parse_utility_kind(const std::string& text);

/// Comfort thresholds for the thermal desirability utility.
struct ThermalThresholds {
  double ppd_l = 0.0, ppd_h = 30.0;
  double dr_l = 10.0, dr_h = 35.0;
  double vert_l = 3.0, vert_h = 9.0;
  double pr_l = 5.0, pr_h = 22.0;
  double floor_min = 16.0, floor_l = 19.0, floor_h = 26.0, floor_max = 30.0;
  double shape = 1.0;

  void validate() const;
};

ThermalThresholds thresholds_a();
ThermalThresholds thresholds_b();

struct UtilitySpec {
  UtilityKind kind = UtilityKind::L1;
  Vector y_opt;              // l1
  double l1_normalizer = 1;  // l1: Z
  Vector alpha, beta;        // beta-products
  Vector beta1, beta2, t;    // piecewise-linear
  double piecewise_min = 0.0, piecewise_max = 1.0;
  ThermalThresholds thermal;

  /// Number of outcomes the spec expects.
  int outcome_dim() const;
  void validate() const;
};

double d_small(double y, double low, double high, double shape);
double d_band(double t, double low, double high, double low_min, double high_max, double shape);

/// Unnormalized piecewise-linear sum with the continuous branch
/// h(y) = b1*y + (b2 - b1)*t below t and b2*y above.
double piecewise_raw(const Vector& y, const Vector& beta1, const Vector& beta2, const Vector& t);

/// Ground-truth utility in [0, 1].
double utility(const UtilitySpec& spec, const Vector& y);

}  // namespace lilo::env
