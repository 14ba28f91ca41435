#pragma once

#include "lilo/types.hpp"

#include <vector>

namespace lilo::gp {

/// Squared-exponential kernel with one lengthscale per input dimension.
///   k(a, b) = output_scale * exp(-0.5 * sum_i ((a_i - b_i) / l_i)^2)
/// `output_scale` is the signal variance.
class RbfArdKernel {
 public:
  RbfArdKernel() = default;
  RbfArdKernel(Vector lengthscales, double output_scale);

  int dim() const { return static_cast<int>(lengthscales_.size()); }
  const Vector& lengthscales() const { return lengthscales_; }
  double output_scale() const { return output_scale_; }

  /// Cross-covariance between the rows of `a` and the rows of `b`.
  Matrix cross(const Matrix& a, const Matrix& b) const;
  Matrix gram(const Matrix& a) const { return cross(a, a); }

  /// Derivatives of gram(a) with respect to log(l_1) ... log(l_d) then
  /// log(output_scale), in that order.
  std::vector<Matrix> gram_log_gradients(const Matrix& a) const;

 private:
  Vector lengthscales_;
  double output_scale_ = 1.0;
};

/// Affine map applied to raw model inputs before the kernel sees them.
/// Default-constructed scaling is the identity.
struct InputScaling {
  Vector lower;
  Vector upper;

  bool identity() const { return lower.size() == 0; }
  Matrix apply(const Matrix& rows) const;
  static InputScaling from_bounds(Vector lower, Vector upper);
};

}  // namespace lilo::gp
