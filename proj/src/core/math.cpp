#include "lilo/math.hpp"

#include <cmath>
#include <limits>

namespace lilo::math {

double erfcx(double x) {
  if (x < 5.0) {
    // exp(x^2) overflows only for x < -26.6 where erfc(x) == 2 anyway.
    if (x < -26.0) return std::numeric_limits<double>::infinity();
    return std::exp(x * x) * std::erfc(x);
  }
  // Continued fraction erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  // evaluated by the modified Lentz method.
  constexpr double tiny = 1e-300;
  double f = x;
  double c = x;
  double d = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double a = 0.5 * k;
    d = x + a * d;
    if (std::abs(d) < tiny) d = tiny;
    c = x + a / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / (kSqrtPi * f);
}

double norm_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double log_norm_cdf(double z) {
  if (z > -5.0) return std::log(norm_cdf(z));
  return std::log(0.5 * erfcx(-z / kSqrt2)) - 0.5 * z * z;
}

double inv_mills(double z) {
  if (z > 8.0) return norm_pdf(z) / norm_cdf(z);
  // phi(z)/Phi(z) = sqrt(2/pi) / erfcx(-z/sqrt(2))
  return 2.0 * kInvSqrt2Pi / erfcx(-z / kSqrt2);
}

double log1mexp(double x) {
  // Maechler's split at -log 2.
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

double log_h(double z) {
  if (z > -1.0) return std::log(norm_pdf(z) + z * norm_cdf(z));
  // h(z) = phi(z) * (1 - |z| * sqrt(pi/2) * erfcx(|z|/sqrt(2))) for z < 0
  const double az = -z;
  if (az < 1e4) {
    const double t = std::log(az * erfcx(az / kSqrt2)) + 0.5 * std::log(0.5 * 3.14159265358979323846);
    return -0.5 * z * z - kLogSqrt2Pi + log1mexp(t);
  }
  // asymptotic: h(z) ~ phi(z) / z^2
  return -0.5 * z * z - kLogSqrt2Pi - 2.0 * std::log(az);
}

}  // namespace lilo::math
