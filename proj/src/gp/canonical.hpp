#pragma once

#include "lilo/types.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace lilo::gp::detail {

/// Permutation that sorts rows lexicographically (ties by original index).
/// Fitting in this order makes results independent of how the caller
/// ordered its training rows.
inline std::vector<int> canonical_row_order(const Matrix& rows, const Vector* targets = nullptr) {
  std::vector<int> order(rows.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (rows(a, c) != rows(b, c)) return rows(a, c) < rows(b, c);
    }
    if (targets != nullptr && (*targets)[a] != (*targets)[b]) return (*targets)[a] < (*targets)[b];
    return false;
  });
  return order;
}

inline Matrix take_rows(const Matrix& rows, const std::vector<int>& order) {
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < order.size(); ++i) out.row(i) = rows.row(order[i]);
  return out;
}

inline Vector take(const Vector& values, const std::vector<int>& order) {
  Vector out(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = values[order[i]];
  return out;
}

}  // namespace lilo::gp::detail
