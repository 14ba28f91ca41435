#pragma once

#include "lilo/service/session.hpp"

#include <nlohmann/json.hpp>

#include <exception>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace lilo::service {

/// HTTP status for an exception raised while serving a request.
int http_status(const std::exception& e);
/// {"code", "message", "details"}
nlohmann::json error_body(const std::exception& e);

/// Routes:
///   GET  /healthz
///   GET  /sessions
///   POST /sessions
///   GET  /sessions/{id}
///   POST /sessions/{id}/answers   {"answers": [...], "wait"?: bool}
///   POST /sessions/{id}/retry     {"wait"?: bool}
///   GET  /sessions/{id}/job
/// and static files under / when a directory is given.
class HttpService {
 public:
  explicit HttpService(SessionManager& manager, std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void wait_until_ready();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lilo::service
