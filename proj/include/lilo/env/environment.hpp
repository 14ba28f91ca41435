#pragma once

#include "lilo/env/outcomes.hpp"
#include "lilo/env/utility.hpp"
#include "lilo/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lilo::env {

/// How raw DTLZ2 values are handed to the utility. Negated keeps the sign
/// the function produces; absolute flips it. Normalized variants map each
/// metric affinely onto [0, 1] using the frozen raw bounds.
enum class OutcomeConvention { NegatedRaw, AbsoluteRaw, NegatedNormalized, AbsoluteNormalized };

std::string to_string(OutcomeConvention c);
OutcomeConvention parse_outcome_convention(const std::string& text);

struct OutcomeBounds {
  Vector lower;
  Vector upper;
};

/// Immutable benchmark problem: outcome function, ground-truth utility and
/// the text the decision maker is seeded with.
class Environment {
 public:
  using OutcomeFn = std::function<Vector(const Vector&)>;

  Environment(std::string id, SearchSpace space, std::vector<std::string> outcome_names, OutcomeFn outcome_fn,
              UtilitySpec utility, std::string seed_message, OutcomeBounds bounds, std::string utility_description,
              std::string utility_constraints);

  const std::string& id() const { return id_; }
  const SearchSpace& space() const { return space_; }
  int input_dim() const { return space_.dim(); }
  int outcome_dim() const { return static_cast<int>(outcome_names_.size()); }
  const std::vector<std::string>& outcome_names() const { return outcome_names_; }
  const UtilitySpec& utility_spec() const { return utility_; }
  const std::string& seed_message() const { return seed_message_; }
  const OutcomeBounds& outcome_bounds() const { return bounds_; }
  /// Plain-language description of the utility for the simulated DM.
  const std::string& utility_description() const { return utility_description_; }
  const std::string& utility_constraints() const { return utility_constraints_; }

  Vector evaluate(const Vector& x) const;
  Matrix evaluate_rows(const Matrix& x) const;
  double utility(const Vector& y) const { return env::utility(utility_, y); }
  Vector utilities(const Matrix& y) const;

  nlohmann::json to_json() const;

 private:
  std::string id_;
  SearchSpace space_;
  std::vector<std::string> outcome_names_;
  OutcomeFn outcome_fn_;
  UtilitySpec utility_;
  std::string seed_message_;
  OutcomeBounds bounds_;
  std::string utility_description_;
  std::string utility_constraints_;
};

using EnvironmentPtr = std::shared_ptr<const Environment>;

struct EnvironmentOptions {
  /// Overrides the per-id default when set.
  std::optional<OutcomeConvention> dtlz2_convention;
  /// Seed of the low-discrepancy sample used for frozen bounds.
  std::uint64_t bounds_seed = 20240607;
  int bounds_samples = 1 << 13;
};

/// Registered ids: dtlz2-l1, dtlz2-beta, dtlz2-piecewise, thermal-a, thermal-b.
std::vector<std::string> registry_ids();
bool is_registered(const std::string& id);
/// Default DTLZ2 convention for a registered id.
OutcomeConvention default_convention(const std::string& id);
EnvironmentPtr make_environment(const std::string& id, const EnvironmentOptions& options = {});

/// Python-style shortest repr of a double ("1.0", "0.8", "1.25").
std::string py_float(double v);
/// "[0.8, 1.0, 0.7, 1.25]"
std::string py_list(const Vector& v);

/// Pairwise oracle label: 0 when option a is at least as good, else 1.
int oracle_pairwise(const Environment& env, const Vector& y_a, const Vector& y_b);

}  // namespace lilo::env
