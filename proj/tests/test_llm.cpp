#include "lilo/errors.hpp"
#include "lilo/llm/backend.hpp"
#include "lilo/llm/bridge.hpp"
#include "lilo/llm/parsers.hpp"
#include "lilo/llm/prompts.hpp"
#include "lilo/llm/transcript.hpp"
#include "lilo/opt/lilo.hpp"
#include "parser_fixtures.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <thread>

using namespace lilo;
using namespace lilo::llm;

namespace {

using Script = std::map<std::string, std::vector<std::string>>;

std::shared_ptr<ScriptedBackend> scripted(Script s) { return std::make_shared<ScriptedBackend>(std::move(s)); }

BridgeConfig config_with_samples(int n) {
  BridgeConfig c;
  c.n_samples = n;
  return c;
}

}  // namespace

TEST(ParserFixtures, EveryCasePasses) {
  const auto suite = fixtures::load(std::string(LILO_FIXTURE_DIR) + "/parsers.json");
  const auto results = fixtures::run_all(suite);
  ASSERT_GE(results.size(), 25u);
  for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Prompts, PairwiseRendersOptionRows) {
  const auto env = fixtures::square_environment();
  const std::string table = pair_table(Vector::Constant(2, 0.1), Vector::Constant(2, 0.9), env->outcome_names());
  EXPECT_NE(table.find("option_0"), std::string::npos);
  EXPECT_NE(table.find("option_1"), std::string::npos);
  EXPECT_NE(table.find("0.9000"), std::string::npos);
}

TEST(Prompts, QuestionTemplatesNameKeys) {
  PromptContext ctx;
  for (const auto& p : prompt_template("init_questions").required_placeholders()) ctx[p] = "X";
  ctx["n_questions"] = "2";
  const std::string out = render_prompt(prompt_template("init_questions"), ctx);
  EXPECT_NE(out.find("q1"), std::string::npos);
  EXPECT_EQ(out.find("{n_questions}"), std::string::npos);
}

TEST(Prompts, EmptyFeedbackRendersPlaceholderText) {
  EXPECT_EQ(render_feedback({}), "(none yet)");
  EXPECT_EQ(render_feedback({{"Q?", "A."}}), "- LILO: Q?\n- DM: A.");
}

TEST(Prompts, MissingPlaceholderNamesIt) {
  try {
    render_prompt(prompt_template("summary"), {});
    FAIL() << "expected TemplateError";
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("'y_names'"), std::string::npos);
  }
}

TEST(Prompts, EscapedBracesAndNumbers) {
  EXPECT_EQ(render_prompt({"t", "{{a}} {b}"}, {{"b", "1"}}), "{a} 1");
  EXPECT_EQ(format_number(-0.0), "0.0000");
  EXPECT_EQ(format_number(0.12345), "0.1235");
  EXPECT_EQ(name_list({"y_1", "y_2"}), "[y_1, y_2]");
  for (const auto& n : template_names()) EXPECT_FALSE(prompt_template(n).body.empty()) << n;
  EXPECT_THROW(prompt_template("nope"), Error);
}

TEST(Parsers, TrailingCommasAndNestedBraces) {
  EXPECT_EQ(parse_json_object("noise {\"a\": {\"b\": [1, 2,],},} tail")["a"]["b"].size(), 2u);
  EXPECT_EQ(strip_trailing_commas("{\"s\": \",}\"}"), "{\"s\": \",}\"}");
  EXPECT_THROW(parse_json_object("no json here"), ParseError);
}

TEST(Parsers, VoteForms) {
  EXPECT_EQ(parse_vote("{\"answer\": \"1\"}"), 1);
  EXPECT_EQ(parse_vote("{\"answer\": true}"), 1);
  EXPECT_EQ(parse_vote("{\"answer\": 0.0}"), 0);
  EXPECT_THROW(parse_vote("{\"answer\": 0.5}"), ParseError);
  EXPECT_THROW(parse_vote("{\"reasoning\": \"x\"}"), ParseError);
}

TEST(Parsers, UtilitiesClampAndIgnoreOrder) {
  const auto r = parse_utilities(
      "{\"arm_index\": \"1_1\", \"p_accept\": 1.5}\n{\"arm_index\": \"1_0\", \"p_accept\": 0.3}\n"
      "{\"arm_index\": \"7_7\", \"p_accept\": 0.9}",
      {"1_0", "1_1"});
  EXPECT_EQ(r.values.size(), 2u);
  EXPECT_DOUBLE_EQ(r.values.at("1_1"), 1.0);
  EXPECT_DOUBLE_EQ(r.values.at("1_0"), 0.3);
  EXPECT_EQ(r.clamped, 1);
}

TEST(Parsers, CandidatesClampAndRejectArity) {
  const auto c = parse_candidates("{\"0\": [1.2, -0.1], \"1\": [0.5, 0.5]}", 2, 2);
  EXPECT_EQ(c.clamped, 2);
  EXPECT_DOUBLE_EQ(c.unit(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(c.unit(0, 1), 0.0);
  EXPECT_THROW(parse_candidates("{\"0\": [0.5]}", 1, 2), ParseError);
  EXPECT_THROW(parse_candidates("{\"0\": [0.5, 0.5]}", 2, 2), ParseError);
}

TEST(Bridge, RetriesThenRaises) {
  auto backend = scripted({{"summary", {"bad", "bad", "bad"}}, {"init_questions", {"x", "y", "z", "w"}}});
  LanguageBridge bridge(backend);
  const auto env = fixtures::square_environment();
  EXPECT_THROW(bridge.get_init_questions(*env, {}, 1, 0), ParseError);
  EXPECT_EQ(backend->calls(), 3);
  EXPECT_EQ(bridge.transcript().size(), 3u);
  for (const auto& r : bridge.transcript().records()) EXPECT_EQ(r.parse_status, "malformed");
}

TEST(Bridge, PairwiseVotesAcrossReplicates) {
  const auto env = fixtures::square_environment();
  const auto data = fixtures::square_data();
  {
    LanguageBridge bridge(scripted({{"pairwise", std::vector<std::string>(5, "{\"answer\": 0}")}}),
                          config_with_samples(5));
    const auto v = bridge.get_pairwise_pref(*env, data, {}, "", {0, 1}, 1);
    EXPECT_EQ(v.votes, std::vector<int>(5, 0));
  }
  {
    LanguageBridge bridge(scripted({{"pairwise", {"{\"answer\": 0}", "{\"answer\": 1}", "{\"answer\": 0}",
                                                  "{\"answer\": 1}"}}}),
                          config_with_samples(4));
    const auto v = bridge.get_pairwise_pref(*env, data, {}, "", {0, 1}, 1);
    EXPECT_EQ(v.votes, (std::vector<int>{0, 1, 0, 1}));
  }
  {
    LanguageBridge bridge(scripted({{"pairwise", {"{\"answer\": \"1\"}"}}}), config_with_samples(1));
    EXPECT_EQ(bridge.get_pairwise_pref(*env, data, {}, "", {0, 1}, 1).votes, std::vector<int>{1});
  }
}

TEST(Bridge, PairDroppedAfterTooManyFailedReplicates) {
  const auto env = fixtures::square_environment();
  const auto data = fixtures::square_data();
  BridgeConfig c = config_with_samples(3);
  c.retries = 0;
  c.max_failed_replicates = 1;
  LanguageBridge bridge(scripted({{"pairwise", {"x", "y", "{\"answer\": 1}"}}}), c);
  const auto votes = bridge.get_pairwise_prefs(*env, data, {}, "", {{0, 1}}, 1);
  EXPECT_TRUE(votes[0].dropped);
  EXPECT_EQ(votes[0].failed_replicates, 2);
  EXPECT_TRUE(votes[0].votes.empty());
}

TEST(Bridge, ScalarReplicatesAndMissingArm) {
  const auto env = fixtures::square_environment();
  const auto data = fixtures::square_data();
  const std::string both_a = "{\"arm_index\": \"1_1\", \"p_accept\": 0.9}\n{\"arm_index\": \"1_0\", \"p_accept\": 0.1}";
  const std::string both_b = "{\"arm_index\": \"1_0\", \"p_accept\": 0.3}\n{\"arm_index\": \"1_1\", \"p_accept\": 0.7}";
  LanguageBridge bridge(scripted({{"scalar", {both_a, both_b}}}), config_with_samples(2));
  const auto est = bridge.estimate_utilities(*env, data, {}, "", 1);
  EXPECT_DOUBLE_EQ(est.mean("1_0"), 0.2);
  EXPECT_DOUBLE_EQ(est.mean("1_1"), 0.8);

  BridgeConfig c = config_with_samples(1);
  c.retries = 0;
  LanguageBridge partial(scripted({{"scalar", {"{\"arm_index\": \"1_0\", \"p_accept\": 0.3}"}}}), c);
  try {
    partial.estimate_utilities(*env, data, {}, "", 1);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("1_1"), std::string::npos);
  }
}

TEST(Bridge, SummaryFallsBackToEmptyAndCaches) {
  const auto env = fixtures::square_environment();
  auto backend = scripted({{"summary", {"junk", "junk", "junk"}}});
  LanguageBridge bridge(backend);
  EXPECT_EQ(bridge.summarize_feedback(*env, fixtures::square_data(), {}, 1), "");
  EXPECT_EQ(bridge.summarize_feedback(*env, fixtures::square_data(), {}, 1), "");
  EXPECT_EQ(backend->calls(), 3);
}

TEST(Bridge, CandidatesMapIntoBoxAndCheckDimension) {
  const auto env = fixtures::square_environment();
  LanguageBridge bridge(scripted({{"candidates_direct", {"{\"0\": [1.5, 0.25]}"}}}));
  const Matrix x = bridge.candidates_direct(*env, fixtures::square_data(), {}, 1, 2);
  EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(0, 1), 0.25);

  BridgeConfig c;
  c.retries = 0;
  LanguageBridge wrong(scripted({{"candidates_direct", {"{\"0\": [0.5, 0.5, 0.5]}"}}}), c);
  EXPECT_THROW(wrong.candidates_direct(*env, fixtures::square_data(), {}, 1, 2), ParseError);
}

TEST(Bridge, SimulatedDmPartialAnswersAndFallback) {
  const auto env = fixtures::square_environment();
  LanguageBridge bridge(scripted({{"dm_answers", {"{\"q2\": \"prefer 1_1\"}", "x", "x", "x"}}}));
  const auto a = bridge.simulate_dm(*env, fixtures::square_data(), {"first?", "second?"}, 1);
  EXPECT_EQ(a, (std::vector<std::string>{kNoComment, "prefer 1_1"}));
  const auto b = bridge.simulate_dm(*env, fixtures::square_data(), {"again?"}, 2);
  EXPECT_EQ(b, std::vector<std::string>{kNoComment});
}

TEST(Bridge, BackendErrorsPropagateWithContext) {
  auto backend = std::make_shared<FunctionBackend>([](const ChatRequest&) -> std::string {
    throw BackendError("connection refused");
  });
  LanguageBridge bridge(backend);
  try {
    bridge.get_init_questions(*fixtures::square_environment(), {}, 1, 3);
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("trial 3"), std::string::npos);
  }
  EXPECT_EQ(bridge.transcript().records().at(0).parse_status, "backend-error");
}

TEST(Bridge, ConfigRejectsUnknownKeys) {
  EXPECT_THROW(BridgeConfig::from_json({{"retry", 2}}), ConfigError);
  EXPECT_THROW(BridgeConfig::from_json({{"n_samples", 0}}), ConfigError);
  EXPECT_EQ(BridgeConfig::from_json(BridgeConfig{}.to_json()).to_json(), BridgeConfig{}.to_json());
}

TEST(Backend, ScriptedFallbackCycleAndExhaustion) {
  ScriptedBackend once(Script{{"*", {"a"}}});
  ChatRequest req;
  req.purpose = "anything";
  EXPECT_EQ(once.complete(req).text, "a");
  EXPECT_THROW(once.complete(req), BackendError);
  ScriptedBackend cycling(Script{{"p", {"a", "b"}}}, true);
  req.purpose = "p";
  EXPECT_EQ(cycling.complete(req).text, "a");
  EXPECT_EQ(cycling.complete(req).text, "b");
  EXPECT_EQ(cycling.complete(req).text, "a");
}

TEST(Backend, HttpClientAgainstLocalServer) {
  httplib::Server server;
  std::string seen_auth, seen_model;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    seen_model = body.at("model");
    const std::string reply = "echo: " + body.at("messages").at(0).at("content").get<std::string>();
    res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}},
                                   {"usage", {{"prompt_tokens", 3}, {"completion_tokens", 4}}}}
                        .dump(),
                    "application/json");
  });
  server.Post("/fail", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("LILO_TEST_KEY", "secret", 1);
  HttpChatConfig cfg;
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.model = "m1";
  cfg.api_key_env = "LILO_TEST_KEY";
  HttpChatBackend backend(cfg);
  ChatRequest req;
  req.messages = {{"user", "hi"}};
  const auto resp = backend.complete(req);
  EXPECT_EQ(resp.text, "echo: hi");
  EXPECT_EQ(resp.prompt_tokens, 3);
  EXPECT_EQ(resp.completion_tokens, 4);
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(seen_model, "m1");

  cfg.path = "/fail";
  HttpChatBackend failing(cfg);
  EXPECT_THROW(failing.complete(req), BackendError);
  server.stop();
  t.join();
}

TEST(Backend, HttpConfigValidation) {
  HttpChatConfig cfg;
  cfg.base_url = "";
  cfg.model = "m";
  ::unsetenv("LILO_CHAT_URL");
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(make_backend({{"kind", "carrier-pigeon"}}), ConfigError);
  EXPECT_EQ(make_backend({{"kind", "synthetic"}})->name(), "synthetic");
}

TEST(Backend, RateLimiterCapsStarts) {
  RateLimiter unlimited(0);
  for (int i = 0; i < 100; ++i) unlimited.acquire();
  RateLimiter limited(3);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 3; ++i) limited.acquire();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(1));
}

TEST(Transcript, ReplayReproducesRun) {
  const auto env = env::make_environment("dtlz2-l1");
  opt::LoopConfig c;
  c.trials = 2;
  c.batch_exp = 2;
  c.num_pairs = 6;
  c.fit.restarts = 2;
  c.acq.restarts = 2;
  c.acq.raw_samples = 32;
  const auto path = std::filesystem::temp_directory_path() / "lilo_replay_test.jsonl";
  std::filesystem::remove(path);
  auto log = std::make_shared<TranscriptLog>(path);
  auto bridge = std::make_shared<LanguageBridge>(std::make_shared<SyntheticBackend>(), config_with_samples(2), log);
  opt::LlmDm dm(bridge);
  const auto first = opt::run_lilo(env, std::make_shared<opt::LlmAgent>(bridge), dm, c);

  const auto records = TranscriptLog::read(path);
  EXPECT_EQ(records.size(), log->size());
  auto replay = std::make_shared<LanguageBridge>(std::make_shared<ScriptedBackend>(replay_script(records)),
                                                 config_with_samples(2));
  opt::LlmDm replay_dm(replay);
  const auto second = opt::run_lilo(env, std::make_shared<opt::LlmAgent>(replay), replay_dm, c);
  EXPECT_EQ(first.to_jsonl(), second.to_jsonl());
  std::filesystem::remove(path);
}
