#include "lilo/gp/kernel.hpp"

#include "lilo/errors.hpp"

namespace lilo::gp {

RbfArdKernel::RbfArdKernel(Vector lengthscales, double output_scale)
    : lengthscales_(std::move(lengthscales)), output_scale_(output_scale) {
  if (lengthscales_.size() == 0) throw InputError("kernel: no lengthscales");
  if ((lengthscales_.array() <= 0.0).any()) throw InputError("kernel: lengthscales must be positive");
  if (!(output_scale_ > 0.0)) throw InputError("kernel: output scale must be positive");
}

Matrix RbfArdKernel::cross(const Matrix& a, const Matrix& b) const {
  if (a.cols() != dim() || b.cols() != dim()) throw InputError("kernel: dimension mismatch");
  const Eigen::ArrayXd inv = lengthscales_.array().inverse();
  const Matrix as = a * inv.matrix().asDiagonal();
  const Matrix bs = b * inv.matrix().asDiagonal();
  const Vector an = as.rowwise().squaredNorm();
  const Vector bn = bs.rowwise().squaredNorm();
  Matrix sq = (-2.0 * as * bs.transpose()).colwise() + an;
  sq.rowwise() += bn.transpose();
  return output_scale_ * (-0.5 * sq.array().cwiseMax(0.0)).exp().matrix();
}

std::vector<Matrix> RbfArdKernel::gram_log_gradients(const Matrix& a) const {
  const Matrix k = gram(a);
  std::vector<Matrix> grads;
  grads.reserve(dim() + 1);
  const Eigen::Index n = a.rows();
  for (int i = 0; i < dim(); ++i) {
    const double inv_l2 = 1.0 / (lengthscales_[i] * lengthscales_[i]);
    Matrix g(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double diff = a(r, i) - a(c, i);
        g(r, c) = k(r, c) * diff * diff * inv_l2;
      }
    }
    grads.push_back(std::move(g));
  }
  grads.push_back(k);
  return grads;
}

InputScaling InputScaling::from_bounds(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw InputError("input scaling: bound sizes differ");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(upper[i] > lower[i])) throw InputError("input scaling: empty bound");
  }
  return InputScaling{std::move(lower), std::move(upper)};
}

Matrix InputScaling::apply(const Matrix& rows) const {
  if (identity()) return rows;
  if (rows.cols() != lower.size()) throw InputError("input scaling: dimension mismatch");
  const Eigen::ArrayXd width = (upper - lower).array();
  Matrix out = rows.rowwise() - lower.transpose();
  out.array().rowwise() /= width.transpose();
  return out;
}

}  // namespace lilo::gp
