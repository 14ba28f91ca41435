#include "lilo/types.hpp"

#include "lilo/errors.hpp"

#include <boost/random/sobol.hpp>

#include <cstdio>
#include <random>

namespace lilo {

SearchSpace::SearchSpace(std::vector<std::string> names, Vector lower, Vector upper)
    : names_(std::move(names)), lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != static_cast<Eigen::Index>(names_.size()) ||
      upper_.size() != static_cast<Eigen::Index>(names_.size())) {
    throw ConfigError("search space: bounds and names differ in length");
  }
  for (int i = 0; i < dim(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw ConfigError("search space: axis '" + names_[i] + "' has empty range");
    }
  }
}

SearchSpace SearchSpace::unit_cube(int dim, const std::string& prefix) {
  std::vector<std::string> names;
  for (int i = 0; i < dim; ++i) names.push_back(prefix + std::to_string(i + 1));
  return SearchSpace(std::move(names), Vector::Zero(dim), Vector::Ones(dim));
}

bool SearchSpace::contains(const Vector& x, double tol) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    if (!(x[i] >= lower_[i] - tol && x[i] <= upper_[i] + tol)) return false;
  }
  return true;
}

Vector SearchSpace::clamp(const Vector& x) const { return x.cwiseMax(lower_).cwiseMin(upper_); }

Vector SearchSpace::to_unit(const Vector& x) const {
  return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
}

Vector SearchSpace::from_unit(const Vector& u) const {
  return (lower_.array() + u.array() * (upper_ - lower_).array()).matrix();
}

Matrix SearchSpace::to_unit_rows(const Matrix& X) const {
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out.row(r) = to_unit(X.row(r).transpose()).transpose();
  return out;
}

Matrix SearchSpace::from_unit_rows(const Matrix& U) const {
  Matrix out(U.rows(), U.cols());
  for (Eigen::Index r = 0; r < U.rows(); ++r) out.row(r) = from_unit(U.row(r).transpose()).transpose();
  return out;
}

Matrix inputs_of(const ExperimentDataset& data) {
  if (data.empty()) return Matrix(0, 0);
  Matrix X(data.size(), data.front().x.size());
  for (std::size_t i = 0; i < data.size(); ++i) X.row(i) = data[i].x.transpose();
  return X;
}

Matrix outcomes_of(const ExperimentDataset& data) {
  if (data.empty()) return Matrix(0, 0);
  Matrix Y(data.size(), data.front().y.size());
  for (std::size_t i = 0; i < data.size(); ++i) Y.row(i) = data[i].y.transpose();
  return Y;
}

std::vector<IndexPair> all_pairs(int m) {
  std::vector<IndexPair> out;
  if (m < 2) return out;
  out.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) out.push_back({i, j});
  return out;
}

Matrix scrambled_sobol(int n, int dim, std::uint64_t seed) {
  if (n < 0 || dim < 1) throw InputError("scrambled_sobol: bad shape");
  boost::random::sobol engine(static_cast<std::size_t>(dim));
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> shift(dim);
  for (auto& s : shift) s = rng();

  Matrix out(n, dim);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < dim; ++c) {
      const std::uint64_t word = static_cast<std::uint64_t>(engine()) ^ shift[c];
      // top 53 bits, centered in their cell so no coordinate is exactly 0
      out(r, c) = (static_cast<double>(word >> 11) + 0.5) * 0x1p-53;
    }
  }
  return out;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace lilo
