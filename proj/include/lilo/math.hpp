#pragma once

// Scalar special functions shared by the GP likelihoods and acquisitions.
// All are stable over the full double range of their argument.

namespace lilo::math {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrtPi = 1.77245385090551602730;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

double norm_pdf(double z);
double norm_cdf(double z);
/// log Phi(z), accurate for z << 0.
double log_norm_cdf(double z);
/// Inverse Mills ratio phi(z) / Phi(z).
double inv_mills(double z);

/// log(1 - exp(x)) for x < 0.
double log1mexp(double x);

/// log(phi(z) + z Phi(z)), the log of the standardized expected improvement.
double log_h(double z);

}  // namespace lilo::math
