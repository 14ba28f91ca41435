#include "lilo/opt/config.hpp"

#include "lilo/errors.hpp"

#include <set>

namespace lilo::opt {

std::string to_string(ProxyMode mode) { return mode == ProxyMode::Pairwise ? "pairwise" : "scalar"; }

ProxyMode parse_proxy_mode(const std::string& text) {
  if (text == "pairwise") return ProxyMode::Pairwise;
  if (text == "scalar") return ProxyMode::Scalar;
  throw ConfigError("unknown proxy mode '" + text + "' (expected pairwise or scalar)");
}

void LoopConfig::validate() const {
  std::vector<std::string> bad;
  if (trials < 1) bad.push_back("trials must be >= 1");
  if (batch_exp < 0) bad.push_back("batch_exp must be >= 1 (or 0 for the input dimension)");
  if (batch_pf < 1) bad.push_back("batch_pf must be >= 1");
  if (num_pairs < 1) bad.push_back("num_pairs must be >= 1");
  if (llm_samples < 1) bad.push_back("llm_samples must be >= 1");
  if (prior_text && prior_text->empty()) bad.push_back("prior_text must be non-empty when given");
  if (fit.restarts < 1) bad.push_back("fit.restarts must be >= 1");
  if (fit.max_iters < 1) bad.push_back("fit.max_iters must be >= 1");
  if (acq.restarts < 1) bad.push_back("acq.restarts must be >= 1");
  if (acq.raw_samples < acq.restarts) bad.push_back("acq.raw_samples must be >= acq.restarts");
  if (bad.empty()) return;
  std::string msg = "invalid loop config: ";
  for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? "; " : "") + bad[i];
  throw ConfigError(msg);
}

nlohmann::json LoopConfig::to_json() const {
  nlohmann::json j;
  j["trials"] = trials;
  j["batch_exp"] = batch_exp;
  j["batch_pf"] = batch_pf;
  j["num_pairs"] = num_pairs;
  j["llm_samples"] = llm_samples;
  j["pair_strategy"] = acq::to_string(pair_strategy);
  j["proxy_mode"] = to_string(proxy_mode);
  j["prior_text"] = prior_text ? nlohmann::json(*prior_text) : nlohmann::json(nullptr);
  j["seed"] = seed;
  j["sobol_init"] = sobol_init;
  j["fit_restarts"] = fit.restarts;
  j["fit_max_iters"] = fit.max_iters;
  j["acq_restarts"] = acq.restarts;
  j["acq_raw_samples"] = acq.raw_samples;
  j["acq_max_iters"] = acq.max_iters;
  return j;
}

LoopConfig LoopConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("loop config must be a JSON object");
  static const std::set<std::string> known = {"trials",      "batch_exp",   "batch_pf",     "num_pairs",
                                              "llm_samples", "pair_strategy", "proxy_mode", "prior_text",
                                              "seed",        "sobol_init",  "fit_restarts", "fit_max_iters", "acq_restarts",
                                              "acq_raw_samples", "acq_max_iters"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("loop config: unknown field '" + key + "'");
  }
  LoopConfig c;
  try {
    c.trials = j.value("trials", c.trials);
    c.batch_exp = j.value("batch_exp", c.batch_exp);
    c.batch_pf = j.value("batch_pf", c.batch_pf);
    c.num_pairs = j.value("num_pairs", c.num_pairs);
    c.llm_samples = j.value("llm_samples", c.llm_samples);
    if (j.contains("pair_strategy")) c.pair_strategy = acq::parse_pair_strategy(j.at("pair_strategy").get<std::string>());
    if (j.contains("proxy_mode")) c.proxy_mode = parse_proxy_mode(j.at("proxy_mode").get<std::string>());
    if (j.contains("prior_text") && !j.at("prior_text").is_null()) c.prior_text = j.at("prior_text").get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.sobol_init = j.value("sobol_init", c.sobol_init);
    c.fit.restarts = j.value("fit_restarts", c.fit.restarts);
    c.fit.max_iters = j.value("fit_max_iters", c.fit.max_iters);
    c.acq.restarts = j.value("acq_restarts", c.acq.restarts);
    c.acq.raw_samples = j.value("acq_raw_samples", c.acq.raw_samples);
    c.acq.max_iters = j.value("acq_max_iters", c.acq.max_iters);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("loop config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace lilo::opt
