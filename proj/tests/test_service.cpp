#include "lilo/errors.hpp"
#include "lilo/opt/lilo.hpp"
#include "lilo/service/http.hpp"
#include "lilo/service/session.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <thread>

using namespace lilo;
using namespace lilo::service;

namespace {

nlohmann::json quick_loop() {
  return {{"trials", 2},
          {"batch_exp", 2},
          {"num_pairs", 8},
          {"seed", 5},
          {"fit_restarts", 2},
          {"fit_max_iters", 60},
          {"acq_restarts", 2},
          {"acq_raw_samples", 32},
          {"acq_max_iters", 20}};
}

class FlakyAgent : public opt::OracleAgent {
 public:
  explicit FlakyAgent(std::shared_ptr<std::atomic<int>> failures) : failures_(std::move(failures)) {}
  std::vector<llm::LabelVote> label_pairs(const env::Environment& env, const ExperimentDataset& data,
                                          const FeedbackDataset& feedback, const std::string& summary,
                                          const std::vector<IndexPair>& pairs, int trial) override {
    if (failures_->load() > 0) {
      --*failures_;
      throw BackendError("labeling service unavailable");
    }
    return OracleAgent::label_pairs(env, data, feedback, summary, pairs, trial);
  }

 private:
  std::shared_ptr<std::atomic<int>> failures_;
};

struct Fixture {
  std::filesystem::path store;
  std::shared_ptr<std::atomic<int>> failures = std::make_shared<std::atomic<int>>(0);
  std::unique_ptr<SessionManager> manager;
  std::unique_ptr<HttpService> http;
  std::thread thread;
  std::unique_ptr<httplib::Client> client;

  explicit Fixture(const std::string& name, std::optional<std::filesystem::path> static_dir = std::nullopt,
                   bool fresh = true) {
    store = std::filesystem::temp_directory_path() / name;
    if (fresh) std::filesystem::remove_all(store);
    start(static_dir);
  }

  void start(std::optional<std::filesystem::path> static_dir = std::nullopt) {
    ServiceOptions o;
    o.store_dir = store;
    auto f = failures;
    o.agent_factory = [f](const opt::LoopConfig&, const std::filesystem::path&) {
      return std::make_shared<FlakyAgent>(f);
    };
    manager = std::make_unique<SessionManager>(o);
    http = std::make_unique<HttpService>(*manager, static_dir);
    const int port = http->bind("127.0.0.1", 0);
    thread = std::thread([this] { http->listen(); });
    http->wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_read_timeout(120, 0);
  }

  void shutdown() {
    http->stop();
    thread.join();
    http.reset();
    manager.reset();
  }

  ~Fixture() {
    if (http) shutdown();
  }

  std::pair<int, nlohmann::json> get(const std::string& path) {
    auto res = client->Get(path);
    if (!res) return {0, nullptr};
    return {res->status, nlohmann::json::parse(res->body, nullptr, false)};
  }

  std::pair<int, nlohmann::json> post(const std::string& path, const nlohmann::json& body) {
    auto res = client->Post(path, body.dump(), "application/json");
    if (!res) return {0, nullptr};
    return {res->status, nlohmann::json::parse(res->body, nullptr, false)};
  }

  nlohmann::json create() {
    auto [status, body] = post("/sessions", {{"environment", "dtlz2-l1"}, {"config", quick_loop()}});
    EXPECT_EQ(status, 201) << body.dump();
    return body;
  }
};

nlohmann::json poll_job(Fixture& f, const std::string& id) {
  for (int i = 0; i < 600; ++i) {
    auto [status, job] = f.get("/sessions/" + id + "/job");
    if (job.value("status", "") != "running") return job;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  return nullptr;
}

}  // namespace

TEST(Service, HealthAndUnknownRoutes) {
  Fixture f("lilo_svc_health");
  auto [status, body] = f.get("/healthz");
  EXPECT_EQ(status, 200);
  EXPECT_EQ(body["status"], "ok");
  auto [s2, b2] = f.get("/sessions/abc123");
  EXPECT_EQ(s2, 404);
  EXPECT_EQ(b2["code"], "not_found");
  EXPECT_TRUE(b2.contains("details"));
}

TEST(Service, CreateReturnsInitialQuestions) {
  Fixture f("lilo_svc_create");
  const auto a = f.create();
  EXPECT_EQ(a["phase"], "awaiting-answers");
  EXPECT_EQ(a["pending"].size(), 2u);
  EXPECT_EQ(a["pending"][0], opt::kGoalQuestion);
  EXPECT_EQ(a["trials"].size(), 1u);
  EXPECT_EQ(a["trials"][0]["trial"], 0);
  EXPECT_TRUE(a["experiments"].empty());
  const auto b = f.create();
  EXPECT_NE(a["id"], b["id"]);
  auto [status, list] = f.get("/sessions");
  EXPECT_EQ(list["sessions"].size(), 2u);

  auto [s1, v1] = f.get("/sessions/" + a["id"].get<std::string>());
  auto [s2, v2] = f.get("/sessions/" + a["id"].get<std::string>());
  EXPECT_EQ(s1, 200);
  EXPECT_EQ(v1, v2);
}

TEST(Service, ValidationErrors) {
  Fixture f("lilo_svc_validation");
  auto [s1, b1] = f.post("/sessions", {{"environment", "no-such-env"}});
  EXPECT_EQ(s1, 404);
  auto [s2, b2] = f.post("/sessions", {{"environment", "dtlz2-l1"}, {"config", {{"trials", 0}, {"batch_pf", 0}}}});
  EXPECT_EQ(s2, 422);
  EXPECT_EQ(b2["code"], "validation");
  EXPECT_GE(b2["details"]["errors"].size(), 2u) << b2.dump();
  auto [s3, b3] = f.post("/sessions", {{"environment", "dtlz2-l1"}, {"method", "simulated-annealing"}});
  EXPECT_EQ(s3, 422);
  auto res = f.client->Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);

  const std::string id = f.create()["id"];
  auto [s4, b4] = f.post("/sessions/" + id + "/answers", {{"answers", {"only one"}}});
  EXPECT_EQ(s4, 422);
  auto [s5, b5] = f.post("/sessions/" + id + "/answers", {{"answers", {1, 2}}});
  EXPECT_EQ(s5, 422);
  auto [s6, b6] = f.post("/sessions/" + id + "/retry", nlohmann::json::object());
  EXPECT_EQ(s6, 409);
}

TEST(Service, AnswersRunAsPollableJob) {
  Fixture f("lilo_svc_job");
  const std::string id = f.create()["id"];
  auto [status, job] = f.post("/sessions/" + id + "/answers", {{"answers", {"", ""}}});
  EXPECT_EQ(status, 202);
  EXPECT_TRUE(job["status"] == "running" || job["status"] == "succeeded");
  const auto done = poll_job(f, id);
  EXPECT_EQ(done["status"], "succeeded");
  auto [s, view] = f.get("/sessions/" + id);
  EXPECT_EQ(view["phase"], "awaiting-answers");
  EXPECT_EQ(view["trial"], 1);
  EXPECT_EQ(view["history"][0]["answer"], "");
  EXPECT_EQ(view["pending"].size(), 2u);
  EXPECT_EQ(view["experiments"].size(), 2u);
  const auto& tr = view["transitions"];
  ASSERT_GE(tr.size(), 3u);
  EXPECT_EQ(tr[tr.size() - 2]["to"], "running-trial");
  EXPECT_EQ(tr.back()["to"], "awaiting-answers");
  for (const auto& t : tr) EXPECT_TRUE(t.contains("at"));
}

TEST(Service, HttpSessionMatchesInProcessRun) {
  const auto env = env::make_environment("dtlz2-l1");
  const opt::LoopConfig config = opt::LoopConfig::from_json(quick_loop());
  opt::OracleDm dm;
  const opt::Trace reference = opt::run_lilo(env, std::make_shared<opt::OracleAgent>(), dm, config);

  Fixture f("lilo_svc_equivalence");
  const std::string id = f.create()["id"];
  for (const auto& t : reference.trials) {
    auto [status, job] = f.post("/sessions/" + id + "/answers", {{"answers", t.answers}, {"wait", true}});
    ASSERT_EQ(status, 200) << job.dump();
    ASSERT_EQ(job["status"], "succeeded") << job.dump();
  }
  auto [s, view] = f.get("/sessions/" + id);
  EXPECT_EQ(view["phase"], "finished");
  EXPECT_TRUE(view["pending"].empty());
  ASSERT_EQ(view["trials"].size(), reference.trials.size());
  for (std::size_t i = 0; i < reference.trials.size(); ++i) {
    EXPECT_EQ(view["trials"][i], reference.trials[i].to_json()) << "trial " << i;
  }
  EXPECT_EQ(view["max_so_far"].get<std::vector<double>>(), reference.max_so_far());
  EXPECT_FALSE(view["best_arm"].is_null());

  auto [s2, b2] = f.post("/sessions/" + id + "/answers", {{"answers", {"a", "b"}}});
  EXPECT_EQ(s2, 409);
  EXPECT_EQ(b2["code"], "conflict");
}

TEST(Service, FailedJobGoesIdleAndRetries) {
  Fixture f("lilo_svc_retry");
  const std::string id = f.create()["id"];
  f.failures->store(0);
  f.post("/sessions/" + id + "/answers", {{"answers", {"goal", "more"}}, {"wait", true}});
  f.failures->store(1);
  auto [s1, job] = f.post("/sessions/" + id + "/answers", {{"answers", {"a1", "a2"}}, {"wait", true}});
  EXPECT_EQ(job["status"], "failed");
  EXPECT_NE(job["error"].get<std::string>().find("unavailable"), std::string::npos);
  auto [s2, view] = f.get("/sessions/" + id);
  EXPECT_EQ(view["phase"], "idle");
  EXPECT_TRUE(view["pending"].empty());
  EXPECT_EQ(view["trial"], 1);
  EXPECT_EQ(view["history"].size(), 2u);

  auto [s3, b3] = f.post("/sessions/" + id + "/answers", {{"answers", {"a1", "a2"}}});
  EXPECT_EQ(s3, 409);
  auto [s4, retried] = f.post("/sessions/" + id + "/retry", {{"wait", true}});
  EXPECT_EQ(retried["status"], "succeeded");
  auto [s5, after] = f.get("/sessions/" + id);
  EXPECT_EQ(after["phase"], "awaiting-answers");
  EXPECT_EQ(after["trial"], 2);
  EXPECT_EQ(after["history"].size(), 4u);
}

TEST(Service, SessionsSurviveRestart) {
  auto f = std::make_unique<Fixture>("lilo_svc_restart");
  const std::string id = f->create()["id"];
  f->post("/sessions/" + id + "/answers", {{"answers", {"goal", "more"}}, {"wait", true}});
  auto [s1, before] = f->get("/sessions/" + id);
  f->shutdown();
  f->start();
  auto [s2, after] = f->get("/sessions/" + id);
  EXPECT_EQ(s2, 200);
  EXPECT_EQ(after["trials"], before["trials"]);
  EXPECT_EQ(after["pending"], before["pending"]);
  EXPECT_EQ(after["phase"], "awaiting-answers");
  auto [s3, job] = f->post("/sessions/" + id + "/answers", {{"answers", {"x", "y"}}, {"wait", true}});
  EXPECT_EQ(job["status"], "succeeded");
}

TEST(Service, ServesStaticFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "lilo_svc_static_assets";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "index.html");
    out << "<html>console</html>";
  }
  Fixture f("lilo_svc_static", dir);
  auto res = f.client->Get("/index.html");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>console</html>");
  std::filesystem::remove_all(dir);
}

TEST(Service, ErrorMapping) {
  EXPECT_EQ(http_status(NotFoundError("x")), 404);
  EXPECT_EQ(http_status(ConflictError("x")), 409);
  EXPECT_EQ(http_status(ConfigError("x")), 422);
  EXPECT_EQ(http_status(BackendError("x")), 502);
  EXPECT_EQ(http_status(std::runtime_error("x")), 500);
  const auto body = error_body(ConfigError("loop config: trials must be >= 1; batch_pf must be >= 1;"));
  EXPECT_EQ(body["code"], "validation");
  EXPECT_EQ(body["details"]["errors"], (nlohmann::json{"trials must be >= 1", "batch_pf must be >= 1"}));
}
