#pragma once

#include "lilo/types.hpp"

namespace lilo::env {

/// Canonical DTLZ2 with every objective negated. The distance term covers
/// the last d - k + 1 coordinates, so sum_j f_j^2 = (1 + h)^2.
Vector dtlz2(const Vector& x, int k);
/// Distance term h(x) of DTLZ2.
double dtlz2_distance(const Vector& x, int k);

struct ThermalPersona {
  double clo = 0.61;
  double met = 1.0;
};

ThermalPersona persona_a();
ThermalPersona persona_b();

/// Fanger predicted mean vote (ISO 7730). Temperatures in degC, air speed in
/// m/s (relative to the body), humidity in percent.
double pmv(double ta, double tr, double v_rel, double rh, double met, double clo, double wme = 0.0);
double ppd(double pmv_value);
/// Draught rate in percent; turbulence intensity in percent.
double draught_rate(double ta, double v, double tu);

/// Thermal search space: ta, tr, rh, v, Tu, dT_vert, dT_pr, T_floor.
SearchSpace thermal_space();

/// [PPD, DR, dT_vert, dT_pr, T_floor] for an input inside thermal_space().
Vector thermal_outcomes(const Vector& x, const ThermalPersona& persona);

}  // namespace lilo::env
