#pragma once

#include "lilo/acq/acquisition.hpp"
#include "lilo/gp/regression_gp.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace lilo::opt {

enum class ProxyMode { Pairwise, Scalar };

std::string to_string(ProxyMode mode);
ProxyMode parse_proxy_mode(const std::string& text);

struct LoopConfig {
  int trials = 8;
  /// Experiment batch size; 0 means "input dimension of the environment".
  int batch_exp = 0;
  int batch_pf = 2;
  int num_pairs = 64;
  int llm_samples = 5;
  acq::PairStrategy pair_strategy = acq::PairStrategy::EuboY;
  ProxyMode proxy_mode = ProxyMode::Pairwise;
  std::optional<std::string> prior_text;
  std::uint64_t seed = 0;
  /// Trial-1 design from a scrambled Sobol sequence; false draws i.i.d. uniform.
  bool sobol_init = true;
  gp::FitConfig fit;
  acq::AcqConfig acq;

  int effective_batch_exp(int input_dim) const { return batch_exp > 0 ? batch_exp : input_dim; }

  /// Throws ConfigError listing every invalid field.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static LoopConfig from_json(const nlohmann::json& j);
};

}  // namespace lilo::opt
