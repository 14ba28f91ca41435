#include "lilo/env/outcomes.hpp"

#include "lilo/errors.hpp"

#include <cmath>
#include <numbers>

namespace lilo::env {

double dtlz2_distance(const Vector& x, int k) {
  const Eigen::Index d = x.size();
  double h = 0.0;
  for (Eigen::Index i = k - 1; i < d; ++i) h += (x[i] - 0.5) * (x[i] - 0.5);
  return h;
}

Vector dtlz2(const Vector& x, int k) {
  const Eigen::Index d = x.size();
  if (k < 2 || d <= k) throw ConfigError("dtlz2: need d > k >= 2");
  const double scale = 1.0 + dtlz2_distance(x, k);
  const double half_pi = 0.5 * std::numbers::pi;
  Vector f(k);
  for (int j = 0; j < k; ++j) {
    double v = scale;
    for (int i = 0; i < k - 1 - j; ++i) v *= std::cos(half_pi * x[i]);
    if (j > 0) v *= std::sin(half_pi * x[k - 1 - j]);
    f[j] = -v;
  }
  return f;
}

ThermalPersona persona_a() { return {0.61, 1.0}; }
ThermalPersona persona_b() { return {0.3, 2.0}; }

double pmv(double ta, double tr, double v_rel, double rh, double met, double clo, double wme) {
  const double pa = rh * 10.0 * std::exp(16.6536 - 4030.183 / (ta + 235.0));
  const double icl = 0.155 * clo;
  const double m = met * 58.15;
  const double w = wme * 58.15;
  const double mw = m - w;
  const double fcl = icl <= 0.078 ? 1.0 + 1.29 * icl : 1.05 + 0.645 * icl;
  const double hcf = 12.1 * std::sqrt(v_rel);
  const double taa = ta + 273.0;
  const double tra = tr + 273.0;
  const double tcla = taa + (35.5 - ta) / (3.5 * icl + 0.1);

  const double p1 = icl * fcl;
  const double p2 = p1 * 3.96;
  const double p3 = p1 * 100.0;
  const double p4 = p1 * taa;
  const double p5 = 308.7 - 0.028 * mw + p2 * std::pow(tra / 100.0, 4.0);
  double xn = tcla / 100.0;
  double xf = tcla / 50.0;
  double hc = hcf;
  int n = 0;
  while (std::abs(xn - xf) > 0.00015) {
    xf = 0.5 * (xf + xn);
    const double hcn = 2.38 * std::pow(std::abs(100.0 * xf - taa), 0.25);
    hc = std::max(hcf, hcn);
    xn = (p5 + p4 * hc - p2 * std::pow(xf, 4.0)) / (100.0 + p3 * hc);
    if (++n > 150) throw NumericalError("pmv: clothing temperature iteration did not converge");
  }
  const double tcl = 100.0 * xn - 273.0;

  const double hl1 = 3.05 * 0.001 * (5733.0 - 6.99 * mw - pa);
  const double hl2 = mw > 58.15 ? 0.42 * (mw - 58.15) : 0.0;
  const double hl3 = 1.7e-5 * m * (5867.0 - pa);
  const double hl4 = 0.0014 * m * (34.0 - ta);
  const double hl5 = 3.96 * fcl * (std::pow(xn, 4.0) - std::pow(tra / 100.0, 4.0));
  const double hl6 = fcl * hc * (tcl - ta);
  const double ts = 0.303 * std::exp(-0.036 * m) + 0.028;
  return ts * (mw - hl1 - hl2 - hl3 - hl4 - hl5 - hl6);
}

double ppd(double pmv_value) {
  const double p2 = pmv_value * pmv_value;
  return 100.0 - 95.0 * std::exp(-0.03353 * p2 * p2 - 0.2179 * p2);
}

double draught_rate(double ta, double v, double tu) {
  if (ta >= 34.0 || v <= 0.05) return 0.0;
  const double dr = (34.0 - ta) * std::pow(v - 0.05, 0.62) * (0.37 * v * tu + 3.14);
  return std::min(dr, 100.0);
}

SearchSpace thermal_space() {
  Vector lo(8), hi(8);
  lo << 18.0, 18.0, 20.0, 0.05, 10.0, 0.0, 0.0, 14.0;
  hi << 32.0, 34.0, 80.0, 0.5, 60.0, 10.0, 25.0, 32.0;
  return SearchSpace({"air_temperature", "mean_radiant_temperature", "relative_humidity", "air_speed",
                      "turbulence_intensity", "vertical_temperature_difference", "radiant_temperature_asymmetry",
                      "floor_temperature"},
                     lo, hi);
}

Vector thermal_outcomes(const Vector& x, const ThermalPersona& persona) {
  static const SearchSpace space = thermal_space();
  if (x.size() != 8 || !space.contains(x, 1e-9)) throw InputError("thermal: input outside the documented axis bounds");
  const double ta = x[0], tr = x[1], rh = x[2], v = x[3], tu = x[4];
  // Body movement raises the air speed the occupant feels.
  const double v_rel = persona.met > 1.0 ? v + 0.3 * (persona.met - 1.0) : v;
  Vector y(5);
  y[0] = ppd(pmv(ta, tr, v_rel, rh, persona.met, persona.clo));
  y[1] = draught_rate(ta, v, tu);
  y[2] = x[5];
  y[3] = x[6];
  y[4] = x[7];
  return y;
}

}  // namespace lilo::env
