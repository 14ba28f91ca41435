#pragma once

#include "lilo/types.hpp"

#include <functional>

namespace lilo::gp::detail {

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Box-projected L-BFGS maximizer with a backtracking Armijo line search.
/// `objective` returns the value and writes the gradient. Every accepted
/// step strictly increases the objective, so the result is never worse than
/// the starting point.
LbfgsResult lbfgs_maximize(const std::function<double(const Vector&, Vector&)>& objective, Vector x0,
                           const Vector& lower, const Vector& upper, int max_iters, double grad_tol,
                           int history = 8);

}  // namespace lilo::gp::detail
