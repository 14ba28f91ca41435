#include "lilo/service/session.hpp"

#include "lilo/env/environment.hpp"
#include "lilo/errors.hpp"
#include "lilo/opt/lilo.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <fstream>
#include <random>
#include <thread>

namespace lilo::service {

namespace {

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  return fmt::format("{:%Y-%m-%dT%H:%M:%S}.{:03d}Z", fmt::gmtime(std::chrono::system_clock::to_time_t(now)), ms);
}

std::string random_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  return fmt::format("{:016x}{:016x}", rng(), rng());
}

struct MethodChoice {
  opt::Method method = opt::Method::Lilo;
  bool scalar = false;
};

MethodChoice parse_session_method(const std::string& text) {
  if (text == "lilo-scalar") return {opt::Method::Lilo, true};
  return {opt::parse_method(text), false};
}

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw InputError("cannot write " + tmp);
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::AwaitingAnswers: return "awaiting-answers";
    case Phase::RunningTrial: return "running-trial";
    case Phase::Idle: return "idle";
    case Phase::Finished: return "finished";
  }
  return "idle";
}

Phase parse_phase(const std::string& text) {
  for (auto p : {Phase::AwaitingAnswers, Phase::RunningTrial, Phase::Idle, Phase::Finished}) {
    if (to_string(p) == text) return p;
  }
  throw InputError("unknown phase '" + text + "'");
}

struct SessionManager::Session {
  std::string id;
  std::string method;
  std::string created_at;
  std::filesystem::path dir;
  std::unique_ptr<opt::LiloEngine> engine;

  mutable std::mutex mu;
  mutable std::condition_variable cv;
  Phase phase = Phase::Idle;
  std::vector<std::string> inflight;
  nlohmann::json job = {{"id", nullptr}, {"status", "none"}};
  nlohmann::json transitions = nlohmann::json::array();
  nlohmann::json view;
  std::thread worker;

  void transition(Phase to) {
    const nlohmann::json from = transitions.empty() ? nlohmann::json(nullptr) : nlohmann::json(to_string(phase));
    transitions.push_back({{"from", from}, {"to", to_string(to)}, {"at", now_iso()}});
    spdlog::info("session {}: {} -> {}", id, transitions.size() == 1 ? "created" : to_string(phase), to_string(to));
    phase = to;
  }

  // Caller holds `mu` and no job is mutating the engine.
  void refresh_view() {
    const auto& trace = engine->trace();
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : trace.trials) trials.push_back(t.to_json());
    nlohmann::json experiments = nlohmann::json::array();
    for (const auto& r : engine->experiments()) {
      experiments.push_back(
          {{"arm_index", r.arm_index}, {"trial", r.trial}, {"x", opt::vector_json(r.x)}, {"y", opt::vector_json(r.y)}});
    }
    nlohmann::json history = nlohmann::json::array();
    for (const auto& f : engine->feedback()) history.push_back({{"question", f.question}, {"answer", f.answer}});
    nlohmann::json best = nullptr;
    for (auto it = trace.trials.rbegin(); it != trace.trials.rend(); ++it) {
      if (!it->best_arm) continue;
      for (const auto& r : engine->experiments()) {
        if (r.arm_index == *it->best_arm) {
          best = {{"arm_index", r.arm_index}, {"trial", it->trial}, {"x", opt::vector_json(r.x)},
                  {"y", opt::vector_json(r.y)}};
        }
      }
      break;
    }
    view = {{"id", id},
            {"environment", engine->environment().id()},
            {"outcome_names", engine->environment().outcome_names()},
            {"input_names", engine->environment().space().names()},
            {"method", method},
            {"config", engine->config().to_json()},
            {"created_at", created_at},
            {"trial", engine->trial()},
            {"total_trials", engine->config().trials},
            {"history", history},
            {"experiments", experiments},
            {"trials", trials},
            {"max_so_far", trace.max_so_far()},
            {"best_arm", best}};
  }

  nlohmann::json current_view() const {
    nlohmann::json v = view;
    v["phase"] = to_string(phase);
    v["pending"] = phase == Phase::AwaitingAnswers ? engine->pending() : std::vector<std::string>{};
    v["job"] = job;
    v["transitions"] = transitions;
    return v;
  }

  void persist() const {
    nlohmann::json doc = {{"id", id},
                          {"method", method},
                          {"created_at", created_at},
                          {"phase", to_string(phase)},
                          {"inflight", inflight},
                          {"job", job},
                          {"transitions", transitions},
                          {"engine", engine->snapshot()}};
    write_atomic(dir / "session.json", doc.dump(1));
  }
};

SessionManager::SessionManager(ServiceOptions options) : options_(std::move(options)) {
  if (!options_.agent_factory) throw ConfigError("session service: no agent factory");
  std::filesystem::create_directories(options_.store_dir);
  load_existing();
}

SessionManager::~SessionManager() {
  std::map<std::string, std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mu_);
    sessions = sessions_;
  }
  for (auto& [id, s] : sessions) {
    if (s->worker.joinable()) s->worker.join();
  }
}

void SessionManager::load_existing() {
  for (const auto& entry : std::filesystem::directory_iterator(options_.store_dir)) {
    const auto file = entry.path() / "session.json";
    if (!entry.is_directory() || !std::filesystem::exists(file)) continue;
    try {
      std::ifstream in(file);
      const auto doc = nlohmann::json::parse(in);
      auto s = std::make_shared<Session>();
      s->id = doc.at("id");
      s->method = doc.at("method");
      s->created_at = doc.at("created_at");
      s->dir = entry.path();
      const auto& snap = doc.at("engine");
      const auto env = env::make_environment(snap.at("environment").get<std::string>());
      const auto config = opt::LoopConfig::from_json(snap.at("config"));
      s->engine = opt::LiloEngine::restore(snap, env, options_.agent_factory(config, s->dir));
      s->phase = parse_phase(doc.at("phase"));
      s->inflight = doc.value("inflight", std::vector<std::string>{});
      s->job = doc.at("job");
      s->transitions = doc.at("transitions");
      if (s->phase == Phase::RunningTrial) {
        s->transition(Phase::Idle);
        s->job["status"] = "failed";
        s->job["error"] = "interrupted by a service restart";
        s->job["finished_at"] = now_iso();
        s->persist();
      }
      s->refresh_view();
      sessions_[s->id] = s;
      spdlog::info("restored session {} ({})", s->id, to_string(s->phase));
    } catch (const std::exception& e) {
      spdlog::error("skipping unreadable session in {}: {}", entry.path().string(), e.what());
    }
  }
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("no session '" + id + "'");
  return it->second;
}

nlohmann::json SessionManager::create(const nlohmann::json& request) {
  if (!request.is_object()) throw InputError("request body must be a JSON object");
  if (!request.contains("environment") || !request["environment"].is_string()) {
    throw InputError("'environment' is required");
  }
  const std::string env_id = request["environment"];
  if (!env::is_registered(env_id)) throw NotFoundError("unknown environment '" + env_id + "'");
  const std::string method = request.value("method", std::string("lilo"));
  const MethodChoice choice = [&] {
    try {
      return parse_session_method(method);
    } catch (const ConfigError& e) {
      throw InputError(e.what());
    }
  }();
  opt::LoopConfig config = opt::LoopConfig::from_json(request.value("config", nlohmann::json::object()));
  if (choice.scalar) config.proxy_mode = opt::ProxyMode::Scalar;

  auto s = std::make_shared<Session>();
  s->id = random_id();
  s->method = method;
  s->created_at = now_iso();
  s->dir = options_.store_dir / s->id;
  std::filesystem::create_directories(s->dir);
  s->engine = std::make_unique<opt::LiloEngine>(env::make_environment(env_id), options_.agent_factory(config, s->dir),
                                                config, choice.method);
  s->engine->begin();
  std::lock_guard lock(s->mu);
  s->transition(Phase::AwaitingAnswers);
  s->refresh_view();
  s->persist();
  {
    std::lock_guard mlock(mu_);
    sessions_[s->id] = s;
  }
  return s->current_view();
}

nlohmann::json SessionManager::state(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->current_view();
}

nlohmann::json SessionManager::job(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  nlohmann::json j = s->job;
  j["phase"] = to_string(s->phase);
  return j;
}

std::vector<std::string> SessionManager::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void SessionManager::wait(const std::string& id) const {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->cv.wait(lock, [&] { return s->phase != Phase::RunningTrial; });
}

void SessionManager::launch(const std::shared_ptr<Session>& s, std::vector<std::string> answers) {
  // Caller holds s->mu.
  if (s->worker.joinable()) s->worker.join();
  s->inflight = answers;
  s->job = {{"id", random_id()}, {"status", "running"}, {"started_at", now_iso()}, {"trial", s->engine->trial()}};
  s->transition(Phase::RunningTrial);
  s->persist();
  s->worker = std::thread([s, answers = std::move(answers)] {
    std::string error;
    try {
      s->engine->submit(answers);
    } catch (const std::exception& e) {
      error = e.what();
    }
    std::lock_guard lock(s->mu);
    s->job["finished_at"] = now_iso();
    if (error.empty()) {
      s->job["status"] = "succeeded";
      s->inflight.clear();
      s->transition(s->engine->finished() ? Phase::Finished : Phase::AwaitingAnswers);
    } else {
      spdlog::error("session {}: trial job failed: {}", s->id, error);
      s->job["status"] = "failed";
      s->job["error"] = error;
      s->transition(Phase::Idle);
    }
    s->refresh_view();
    try {
      s->persist();
    } catch (const std::exception& e) {
      spdlog::error("session {}: cannot persist: {}", s->id, e.what());
    }
    s->cv.notify_all();
  });
}

nlohmann::json SessionManager::submit(const std::string& id, const std::vector<std::string>& answers, bool wait_for) {
  auto s = find(id);
  {
    std::lock_guard lock(s->mu);
    if (s->phase != Phase::AwaitingAnswers) {
      throw ConflictError("session is " + to_string(s->phase) + ", not awaiting answers");
    }
    const auto n = s->engine->pending().size();
    if (answers.size() != n) {
      throw InputError("expected " + std::to_string(n) + " answers, got " + std::to_string(answers.size()));
    }
    launch(s, answers);
  }
  if (wait_for) wait(id);
  return job(id);
}

nlohmann::json SessionManager::retry(const std::string& id, bool wait_for) {
  auto s = find(id);
  {
    std::lock_guard lock(s->mu);
    if (s->phase != Phase::Idle || s->inflight.empty()) throw ConflictError("session has no failed submission to retry");
    launch(s, s->inflight);
  }
  if (wait_for) wait(id);
  return job(id);
}

}  // namespace lilo::service
