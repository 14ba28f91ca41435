#include "lilo/errors.hpp"
#include "lilo/llm/backend.hpp"
#include "lilo/llm/bridge.hpp"
#include "lilo/service/http.hpp"
#include "lilo/service/session.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

using namespace lilo;

namespace {

service::HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
  return j;
}

nlohmann::json backend_spec(const std::string& text) {
  if (text.empty() || text == "oracle" || text == "synthetic" || text.rfind("scripted:", 0) == 0) return text;
  if (text.front() == '@') return read_json_file(text.substr(1));
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("--backend must be oracle, synthetic, scripted:<path>, @<file> or JSON");
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive session service for language-in-the-loop optimization"};
  std::string host = "127.0.0.1", store = "sessions", backend = "oracle", log_level = "info";
  int port = 8080;
  std::optional<std::string> static_dir, bridge_file;
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port, 0 for any free port");
  app.add_option("--store", store, "Directory for persisted sessions");
  app.add_option("--static", static_dir, "Directory of console assets served at /")->check(CLI::ExistingDirectory);
  app.add_option("--backend", backend, "oracle, synthetic, scripted:<path>, @<file.json> or inline JSON");
  app.add_option("--bridge", bridge_file, "JSON file with language bridge settings")->check(CLI::ExistingFile);
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    const nlohmann::json spec = backend_spec(backend);
    const llm::BridgeConfig bridge_base =
        bridge_file ? llm::BridgeConfig::from_json(read_json_file(*bridge_file)) : llm::BridgeConfig{};
    const bool oracle = spec.is_string() && spec.get<std::string>() == "oracle";
    if (!oracle) llm::backend_from_spec(spec);

    service::ServiceOptions options;
    options.store_dir = store;
    options.agent_factory = [spec, bridge_base, oracle](const opt::LoopConfig& config,
                                                         const std::filesystem::path& dir) -> std::shared_ptr<opt::Agent> {
      if (oracle) return std::make_shared<opt::OracleAgent>(config.llm_samples);
      llm::BridgeConfig bc = bridge_base;
      bc.seed = config.seed;
      bc.n_samples = config.llm_samples;
      auto log = std::make_shared<llm::TranscriptLog>(dir / "transcript.jsonl");
      return std::make_shared<opt::LlmAgent>(
          std::make_shared<llm::LanguageBridge>(llm::backend_from_spec(spec), bc, log));
    };
    service::SessionManager manager(options);
    service::HttpService http(manager, static_dir ? std::optional<std::filesystem::path>(*static_dir) : std::nullopt);
    const int bound = http.bind(host, port);
    g_service = &http;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    spdlog::info("listening on http://{}:{}", host, bound);
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    http.listen();
    g_service = nullptr;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
