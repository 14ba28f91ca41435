#pragma once

#include "lilo/types.hpp"

#include <random>

namespace lilo::testutil {

inline double kendall_tau(const Vector& a, const Vector& b) {
  long concordant = 0, discordant = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = i + 1; j < a.size(); ++j) {
      const double s = (a[i] - a[j]) * (b[i] - b[j]);
      if (s > 0) ++concordant;
      if (s < 0) ++discordant;
    }
  }
  const double n = static_cast<double>(a.size());
  return static_cast<double>(concordant - discordant) / (0.5 * n * (n - 1.0));
}

inline Matrix uniform_rows(int n, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix out(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = u(rng);
  return out;
}

}  // namespace lilo::testutil
