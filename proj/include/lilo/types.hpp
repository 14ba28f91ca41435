#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace lilo {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box with named axes.
class SearchSpace {
 public:
  SearchSpace() = default;
  SearchSpace(std::vector<std::string> names, Vector lower, Vector upper);

  static SearchSpace unit_cube(int dim, const std::string& prefix = "x");

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& u) const;
  /// Row-wise maps of `to_unit` / `from_unit`.
  Matrix to_unit_rows(const Matrix& X) const;
  Matrix from_unit_rows(const Matrix& U) const;

 private:
  std::vector<std::string> names_;
  Vector lower_;
  Vector upper_;
};

/// One evaluated arm. `arm_index` is "<trial>_<position>", the identifier the
/// language model and the decision maker see.
struct ExperimentRecord {
  std::string arm_index;
  int trial = 0;
  Vector x;
  Vector y;
};

using ExperimentDataset = std::vector<ExperimentRecord>;

Matrix inputs_of(const ExperimentDataset& data);
Matrix outcomes_of(const ExperimentDataset& data);

struct FeedbackEntry {
  std::string question;
  std::string answer;
};

using FeedbackDataset = std::vector<FeedbackEntry>;

/// Pairwise preference between two items of a preference dataset.
struct Comparison {
  int winner = 0;
  int loser = 0;
  friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Unordered pair of item indices with first < second.
struct IndexPair {
  int first = 0;
  int second = 0;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

/// All m(m-1)/2 unordered pairs in lexicographic order.
std::vector<IndexPair> all_pairs(int m);

/// Scrambled Sobol points in [0,1)^dim. The scramble is a random digital
/// shift drawn from `seed`, so distinct seeds give distinct point sets with
/// the same low-discrepancy structure.
Matrix scrambled_sobol(int n, int dim, std::uint64_t seed);

/// 64-bit FNV-1a; stable across platforms, used for request hashes and seeds.
std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t value);

}  // namespace lilo
