#include "lilo/env/environment.hpp"

#include "lilo/errors.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace lilo::env {

namespace {

constexpr int kDtlzDim = 8;
constexpr int kDtlzOutcomes = 4;

std::vector<std::string> numbered(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int i = 1; i <= n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

nlohmann::json to_json_vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

OutcomeBounds bounds_of(const Matrix& y) {
  return {y.colwise().minCoeff().transpose(), y.colwise().maxCoeff().transpose()};
}

struct Dtlz2Outcomes {
  OutcomeConvention convention;
  OutcomeBounds raw;  // bounds of the negated values

  Vector operator()(const Vector& x) const {
    const Vector f = dtlz2(x, kDtlzOutcomes);
    switch (convention) {
      case OutcomeConvention::NegatedRaw: return f;
      case OutcomeConvention::AbsoluteRaw: return -f;
      case OutcomeConvention::NegatedNormalized:
        return ((f - raw.lower).array() / (raw.upper - raw.lower).array()).matrix();
      case OutcomeConvention::AbsoluteNormalized:
        return ((raw.upper - f).array() / (raw.upper - raw.lower).array()).matrix();
    }
    return f;
  }
};

Matrix sample_inputs(const SearchSpace& space, const EnvironmentOptions& options) {
  return space.from_unit_rows(scrambled_sobol(options.bounds_samples, space.dim(), options.bounds_seed));
}

Matrix apply_rows(const Environment::OutcomeFn& fn, const Matrix& x, int k) {
  Matrix y(x.rows(), k);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = fn(x.row(i).transpose()).transpose();
  return y;
}

std::string threshold_text(const Vector& t) {
  std::ostringstream out;
  out << ":";
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    out << (i ? ", " : " ") << "y_" << (i + 1) << " >= " << py_float(t[i]);
  }
  return out.str();
}

const char* kConstraints =
    "Describe your preferences the way a person would: talk about which outcomes you like or dislike and why, "
    "and compare outcomes when asked. Do not quote numbers from the utility column.";

EnvironmentPtr make_dtlz2(const std::string& id, UtilityKind kind, const EnvironmentOptions& options) {
  const SearchSpace space = SearchSpace::unit_cube(kDtlzDim, "x_");
  const Matrix xs = sample_inputs(space, options);
  Dtlz2Outcomes fn{options.dtlz2_convention.value_or(default_convention(id)), {}};
  {
    Matrix raw(xs.rows(), kDtlzOutcomes);
    for (Eigen::Index i = 0; i < xs.rows(); ++i) raw.row(i) = dtlz2(xs.row(i).transpose(), kDtlzOutcomes).transpose();
    fn.raw = bounds_of(raw);
  }
  const Matrix ys = apply_rows(fn, xs, kDtlzOutcomes);
  const OutcomeBounds bounds = bounds_of(ys);

  UtilitySpec u;
  u.kind = kind;
  std::string seed, description;
  switch (kind) {
    case UtilityKind::L1: {
      u.y_opt = vec({0.8, 1.0, 0.7, 1.25});
      u.l1_normalizer = 0.0;
      for (int i = 0; i < kDtlzOutcomes; ++i) {
        u.l1_normalizer += std::max(std::abs(u.y_opt[i] - bounds.lower[i]), std::abs(bounds.upper[i] - u.y_opt[i]));
      }
      seed = "My goal is to bring all the outcome metrics as close to " + py_list(u.y_opt) + " as possible.";
      description = "Your satisfaction depends on how close the outcomes are to your ideal values " + py_list(u.y_opt) +
                    ". A deviation in any metric, in either direction, lowers satisfaction in proportion to its size, "
                    "and deviations in different metrics add up.";
      break;
    }
    case UtilityKind::BetaProducts:
      u.alpha = vec({0.5, 2.0, 2.0, 2.0});
      u.beta = vec({0.5, 1.0, 2.0, 5.0});
      seed =
          "My goal is to bring all the outcome metrics as close to 1 as possible. Results are strongest only when "
          "every metric is high -- if any metric is low, it significantly reduces the overall performance.";
      description =
          "Your satisfaction rises as each outcome rises towards 1, with a different rate of gain per metric. "
          "Satisfaction is multiplicative across metrics, so one poor metric spoils an otherwise good outcome.";
      break;
    case UtilityKind::PiecewiseLinear: {
      u.beta1 = vec({4.0, 3.0, 2.0, 1.0});
      u.beta2 = vec({0.4, 0.3, 0.2, 0.1});
      u.t = vec({1.0, 0.8, 0.5, 0.5});
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (Eigen::Index i = 0; i < ys.rows(); ++i) {
        const double r = piecewise_raw(ys.row(i).transpose(), u.beta1, u.beta2, u.t);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      u.piecewise_min = lo;
      u.piecewise_max = hi;
      seed = "My goal is to achieve the following thresholds in each outcome" + threshold_text(u.t) +
             ". Improvements over the thresholds are always good, but less important than bringing the outcomes to "
             "their threshold values. The further away an outcome is from its threshold, the higher is its negative "
             "impact on the overall performance.";
      description = "You have a threshold for each outcome" + threshold_text(u.t) +
                    ". Falling short of a threshold hurts a lot, and the first metrics matter most. Beyond its "
                    "threshold a metric still helps, but only a little.";
      break;
    }
    case UtilityKind::ThermalDesirability:
      throw ConfigError("dtlz2 environments do not use the thermal utility");
  }
  u.validate();
  return std::make_shared<Environment>(id, space, numbered("y_", kDtlzOutcomes), fn, u, seed, bounds, description,
                                       kConstraints);
}

EnvironmentPtr make_thermal(const std::string& id, const ThermalPersona& persona, const ThermalThresholds& th,
                            const EnvironmentOptions& options) {
  const SearchSpace space = thermal_space();
  Environment::OutcomeFn fn = [persona](const Vector& x) { return thermal_outcomes(x, persona); };
  const Matrix ys = apply_rows(fn, sample_inputs(space, options), 5);
  UtilitySpec u;
  u.kind = UtilityKind::ThermalDesirability;
  u.thermal = th;
  u.validate();
  std::ostringstream desc;
  desc << "You judge the indoor climate by five metrics: PPD (percentage of people dissatisfied), DR (draught rate), "
          "dT_vert (vertical air temperature difference), dT_pr (radiant temperature asymmetry) and T_floor (floor "
          "temperature). PPD, DR, dT_vert and dT_pr are fine up to "
       << py_float(th.ppd_l) << ", " << py_float(th.dr_l) << ", " << py_float(th.vert_l) << " and "
       << py_float(th.pr_l) << " and become unacceptable at " << py_float(th.ppd_h) << ", " << py_float(th.dr_h)
       << ", " << py_float(th.vert_h) << " and " << py_float(th.pr_h)
       << ". The floor is comfortable between " << py_float(th.floor_l) << " and " << py_float(th.floor_h)
       << " and unacceptable outside " << py_float(th.floor_min) << " to " << py_float(th.floor_max)
       << ". Any single unacceptable metric makes the whole condition unacceptable.";
  return std::make_shared<Environment>(id, space, std::vector<std::string>{"PPD", "DR", "dT_vert", "dT_pr", "T_floor"},
                                       fn, u, "My goal is to keep all metrics within my thermal comfort preferences.",
                                       bounds_of(ys), desc.str(), kConstraints);
}

}  // namespace

std::string to_string(OutcomeConvention c) {
  switch (c) {
    case OutcomeConvention::NegatedRaw: return "negated-raw";
    case OutcomeConvention::AbsoluteRaw: return "absolute-raw";
    case OutcomeConvention::NegatedNormalized: return "negated-normalized";
    case OutcomeConvention::AbsoluteNormalized: return "absolute-normalized";
  }
  return "negated-raw";
}

OutcomeConvention parse_outcome_convention(const std::string& text) {
  for (auto c : {OutcomeConvention::NegatedRaw, OutcomeConvention::AbsoluteRaw, OutcomeConvention::NegatedNormalized,
                 OutcomeConvention::AbsoluteNormalized}) {
    if (to_string(c) == text) return c;
  }
  throw ConfigError("unknown outcome convention '" + text + "'");
}

Environment::Environment(std::string id, SearchSpace space, std::vector<std::string> outcome_names, OutcomeFn outcome_fn,
                         UtilitySpec utility, std::string seed_message, OutcomeBounds bounds,
                         std::string utility_description, std::string utility_constraints)
    : id_(std::move(id)),
      space_(std::move(space)),
      outcome_names_(std::move(outcome_names)),
      outcome_fn_(std::move(outcome_fn)),
      utility_(std::move(utility)),
      seed_message_(std::move(seed_message)),
      bounds_(std::move(bounds)),
      utility_description_(std::move(utility_description)),
      utility_constraints_(std::move(utility_constraints)) {
  if (utility_.outcome_dim() != outcome_dim()) throw ConfigError("environment: utility and outcome dimensions differ");
}

Vector Environment::evaluate(const Vector& x) const {
  if (x.size() != input_dim()) throw InputError("environment " + id_ + ": input has wrong dimension");
  if (!x.allFinite()) throw InputError("environment " + id_ + ": non-finite input");
  return outcome_fn_(x);
}

Matrix Environment::evaluate_rows(const Matrix& x) const {
  Matrix y(x.rows(), outcome_dim());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y.row(i) = evaluate(x.row(i).transpose()).transpose();
  return y;
}

Vector Environment::utilities(const Matrix& y) const {
  Vector u(y.rows());
  for (Eigen::Index i = 0; i < y.rows(); ++i) u[i] = utility(y.row(i).transpose());
  return u;
}

nlohmann::json Environment::to_json() const {
  nlohmann::json j;
  j["id"] = id_;
  j["inputs"] = space_.names();
  j["input_lower"] = to_json_vec(space_.lower());
  j["input_upper"] = to_json_vec(space_.upper());
  j["outcomes"] = outcome_names_;
  j["outcome_lower"] = to_json_vec(bounds_.lower);
  j["outcome_upper"] = to_json_vec(bounds_.upper);
  j["seed_message"] = seed_message_;
  nlohmann::json u;
  u["kind"] = to_string(utility_.kind);
  switch (utility_.kind) {
    case UtilityKind::L1:
      u["y_opt"] = to_json_vec(utility_.y_opt);
      u["normalizer"] = utility_.l1_normalizer;
      break;
    case UtilityKind::BetaProducts:
      u["alpha"] = to_json_vec(utility_.alpha);
      u["beta"] = to_json_vec(utility_.beta);
      break;
    case UtilityKind::PiecewiseLinear:
      u["beta1"] = to_json_vec(utility_.beta1);
      u["beta2"] = to_json_vec(utility_.beta2);
      u["t"] = to_json_vec(utility_.t);
      u["min"] = utility_.piecewise_min;
      u["max"] = utility_.piecewise_max;
      break;
    case UtilityKind::ThermalDesirability: {
      const auto& t = utility_.thermal;
      u["thresholds"] = {{"ppd", {t.ppd_l, t.ppd_h}},
                         {"dr", {t.dr_l, t.dr_h}},
                         {"dT_vert", {t.vert_l, t.vert_h}},
                         {"dT_pr", {t.pr_l, t.pr_h}},
                         {"T_floor", {t.floor_min, t.floor_l, t.floor_h, t.floor_max}},
                         {"shape", t.shape}};
      break;
    }
  }
  j["utility"] = u;
  return j;
}

std::vector<std::string> registry_ids() {
  return {"dtlz2-l1", "dtlz2-beta", "dtlz2-piecewise", "thermal-a", "thermal-b"};
}

bool is_registered(const std::string& id) {
  for (const auto& r : registry_ids()) {
    if (r == id) return true;
  }
  return false;
}

OutcomeConvention default_convention(const std::string& id) {
  if (id == "dtlz2-beta") return OutcomeConvention::NegatedNormalized;
  return OutcomeConvention::AbsoluteNormalized;
}

EnvironmentPtr make_environment(const std::string& id, const EnvironmentOptions& options) {
  if (id == "dtlz2-l1") return make_dtlz2(id, UtilityKind::L1, options);
  if (id == "dtlz2-beta") return make_dtlz2(id, UtilityKind::BetaProducts, options);
  if (id == "dtlz2-piecewise") return make_dtlz2(id, UtilityKind::PiecewiseLinear, options);
  if (id == "thermal-a") return make_thermal(id, persona_a(), thresholds_a(), options);
  if (id == "thermal-b") return make_thermal(id, persona_b(), thresholds_b(), options);
  throw NotFoundError("unknown environment '" + id + "'");
}

std::string py_float(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string py_list(const Vector& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + py_float(v[i]);
  return out + "]";
}

int oracle_pairwise(const Environment& env, const Vector& y_a, const Vector& y_b) {
  return env.utility(y_a) >= env.utility(y_b) ? 0 : 1;
}

}  // namespace lilo::env
