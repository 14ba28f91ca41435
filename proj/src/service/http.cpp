#include "lilo/service/http.hpp"

#include "lilo/errors.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

namespace lilo::service {

namespace {

std::vector<std::string> split_details(const std::string& message) {
  std::vector<std::string> out;
  const auto colon = message.find(':');
  if (colon == std::string::npos) return out;
  std::string rest = message.substr(colon + 1);
  std::size_t start = 0;
  while (start < rest.size()) {
    auto end = rest.find(';', start);
    if (end == std::string::npos) end = rest.size();
    std::string item = rest.substr(start, end - start);
    const auto a = item.find_first_not_of(' ');
    if (a != std::string::npos) out.push_back(item.substr(a));
    start = end + 1;
  }
  return out;
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw InputError("request body is not valid JSON");
  return j;
}

}  // namespace

int http_status(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return 422;
  if (dynamic_cast<const BackendError*>(&e)) return 502;
  return 500;
}

nlohmann::json error_body(const std::exception& e) {
  std::string code = "internal";
  if (auto* err = dynamic_cast<const Error*>(&e)) code = err->kind();
  if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const ConfigError*>(&e)) code = "validation";
  nlohmann::json details = nlohmann::json::object();
  const auto fields = split_details(e.what());
  if (!fields.empty()) details["errors"] = fields;
  return {{"code", code}, {"message", e.what()}, {"details", details}};
}

struct HttpService::Impl {
  SessionManager& manager;
  httplib::Server server;

  explicit Impl(SessionManager& m) : manager(m) {}

  template <class F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const std::exception& e) {
        const int status = http_status(e);
        if (status >= 500) spdlog::error("{} {}: {}", req.method, req.path, e.what());
        send_json(res, status, error_body(e));
      }
    };
  }
};

HttpService::HttpService(SessionManager& manager, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(manager)) {
  auto& srv = impl_->server;
  auto& m = impl_->manager;
  srv.Get("/healthz", impl_->guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  }));
  srv.Get("/sessions", impl_->guarded([&m](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"sessions", m.list()}});
  }));
  srv.Post("/sessions", impl_->guarded([&m](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 201, m.create(parse_body(req)));
  }));
  srv.Get(R"(/sessions/([0-9a-f]+))", impl_->guarded([&m](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, m.state(req.matches[1]));
  }));
  srv.Get(R"(/sessions/([0-9a-f]+)/job)", impl_->guarded([&m](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, m.job(req.matches[1]));
  }));
  srv.Post(R"(/sessions/([0-9a-f]+)/answers)",
           impl_->guarded([&m](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             if (!body.contains("answers") || !body["answers"].is_array()) {
               throw InputError("'answers' must be a list of strings");
             }
             std::vector<std::string> answers;
             for (const auto& a : body["answers"]) {
               if (!a.is_string()) throw InputError("'answers' must be a list of strings");
               answers.push_back(a.get<std::string>());
             }
             const bool wait = body.value("wait", false);
             const auto job = m.submit(req.matches[1], answers, wait);
             send_json(res, wait ? 200 : 202, job);
           }));
  srv.Post(R"(/sessions/([0-9a-f]+)/retry)", impl_->guarded([&m](const httplib::Request& req, httplib::Response& res) {
    const bool wait = parse_body(req).value("wait", false);
    const auto job = m.retry(req.matches[1], wait);
    send_json(res, wait ? 200 : 202, job);
  }));
  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      throw ConfigError("static directory not found: " + static_dir->string());
    }
  }
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_json(res, 404, {{"code", "not_found"}, {"message", "no route for " + req.path}, {"details", nlohmann::json::object()}});
    }
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw ConfigError("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpService::listen() { impl_->server.listen_after_bind(); }
void HttpService::wait_until_ready() { impl_->server.wait_until_ready(); }
void HttpService::stop() { impl_->server.stop(); }

}  // namespace lilo::service
