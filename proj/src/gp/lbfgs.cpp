#include "lbfgs.hpp"

#include <cmath>
#include <deque>

namespace lilo::gp::detail {

namespace {

Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Gradient with components zeroed where the box blocks ascent.
Vector projected_gradient(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper) {
  Vector pg = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lower[i] && g[i] < 0.0) || (x[i] >= upper[i] && g[i] > 0.0)) pg[i] = 0.0;
  }
  return pg;
}

}  // namespace

LbfgsResult lbfgs_maximize(const std::function<double(const Vector&, Vector&)>& objective, Vector x0,
                           const Vector& lower, const Vector& upper, int max_iters, double grad_tol,
                           int history) {
  LbfgsResult result;
  Vector x = project(x0, lower, upper);
  Vector grad(x.size());
  double value = objective(x, grad);
  std::deque<std::pair<Vector, Vector>> memory;  // (s, y) in minimization convention

  for (int iter = 0; iter < max_iters; ++iter) {
    const Vector pg = projected_gradient(x, grad, lower, upper);
    if (!std::isfinite(value) || pg.lpNorm<Eigen::Infinity>() < grad_tol) {
      result.converged = std::isfinite(value);
      result.iterations = iter;
      break;
    }

    // Two-loop recursion on the minimization gradient -grad.
    Vector q = -pg;
    std::vector<double> alphas(memory.size());
    for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = memory[i];
      const double rho = 1.0 / y.dot(s);
      alphas[i] = rho * s.dot(q);
      q -= alphas[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      const double rho = 1.0 / y.dot(s);
      const double beta = rho * y.dot(q);
      q += (alphas[i] - beta) * s;
    }
    Vector direction = -q;
    if (direction.dot(pg) <= 0.0) {
      direction = pg;
      memory.clear();
    }
    if (memory.empty()) {
      // First step: cap the move at unit length in parameter space.
      const double norm = direction.norm();
      if (norm > 1.0) direction /= norm;
    }

    double step = 1.0;
    Vector x_new;
    Vector grad_new(x.size());
    double value_new = value;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = project(x + step * direction, lower, upper);
      value_new = objective(x_new, grad_new);
      if (std::isfinite(value_new) && value_new >= value + 1e-4 * grad.dot(x_new - x) && value_new > value) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.iterations = iter;
      result.converged = true;  // no further ascent possible from here
      break;
    }

    const Vector s = x_new - x;
    const Vector y = -(grad_new - grad);
    if (s.dot(y) > 1e-12) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > history) memory.pop_front();
    }
    x = x_new;
    grad = grad_new;
    value = value_new;
    result.iterations = iter + 1;
  }

  result.x = x;
  result.value = value;
  return result;
}

}  // namespace lilo::gp::detail
