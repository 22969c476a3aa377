#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "srbench/errors.hpp"
#include "srbench/gateway.hpp"
#include "srbench/hash.hpp"
#include "srbench/parsing.hpp"
#include "srbench/reporting.hpp"
#include "test_util.hpp"

using namespace srbench;
using srbench::testutil::TempDir;

namespace {

class FakeTransport : public Transport {
 public:
  explicit FakeTransport(std::deque<HttpReply> replies) : replies_(std::move(replies)) {}

  HttpReply post(const HttpRequest& req) override {
    std::lock_guard lock(mu_);
    requests.push_back(req);
    if (replies_.empty()) {
      return {500, "", ""};
    }
    HttpReply r = replies_.front();
    replies_.pop_front();
    return r;
  }

  std::vector<HttpRequest> requests;

 private:
  std::mutex mu_;
  std::deque<HttpReply> replies_;
};

HttpReply ok_reply(const std::string& content) {
  nlohmann::json j{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return {200, j.dump(), ""};
}

PromptInstance prompt(const std::string& variant, const std::string& text = "prompt text") {
  return PromptInstance{sha256_hex(text + variant), variant, text, "builtin-v1"};
}

struct KeyEnv {
  explicit KeyEnv(const char* value) { setenv("SRBENCH_TEST_KEY", value, 1); }
  ~KeyEnv() { unsetenv("SRBENCH_TEST_KEY"); }
};

LlmConfig test_llm() {
  LlmConfig c;
  c.endpoint_url = "https://llm.example.test:8443/v1/chat/completions";
  c.api_key_env = "SRBENCH_TEST_KEY";
  c.max_retries = 3;
  return c;
}

struct RecordingSleep {
  std::vector<std::chrono::milliseconds> delays;
  RetryPolicy policy() {
    RetryPolicy p;
    p.sleep = [this](std::chrono::milliseconds d) { delays.push_back(d); };
    return p;
  }
};

}  // namespace


TEST(Endpoint, Parsing) {
  const Endpoint e = parse_endpoint("https://llm.example.test:8443/v1/chat/completions");
  EXPECT_EQ(e.scheme, "https");
  EXPECT_EQ(e.host, "llm.example.test");
  EXPECT_EQ(e.port, 8443);
  EXPECT_EQ(e.path, "/v1/chat/completions");
  EXPECT_EQ(parse_endpoint("http://localhost/x").port, 80);
  EXPECT_EQ(parse_endpoint("https://api.openai.com/v1/chat/completions").port, 443);
  EXPECT_THROW(parse_endpoint("ftp://x/y"), ConfigError);
  EXPECT_THROW(parse_endpoint("no-scheme"), ConfigError);
  EXPECT_THROW(parse_endpoint("http://host:99999/"), ConfigError);
}

TEST(ChatCompletions, MissingKeyIsConfigError) {
  unsetenv("SRBENCH_TEST_KEY");
  EXPECT_THROW(ChatCompletionsProvider(test_llm(), std::make_shared<FakeTransport>(std::deque<HttpReply>{})),
               ConfigError);
}

TEST(ChatCompletions, RequestShapeAndSuccess) {
  KeyEnv key("sk-test-123");
  auto transport = std::make_shared<FakeTransport>(std::deque<HttpReply>{ok_reply("Realism: Realistic")});
  ChatCompletionsProvider p(test_llm(), transport);
  const RawResponse r = p.evaluate({prompt("s/original"), 2});
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.text, "Realism: Realistic");
  EXPECT_EQ(r.repetition_index, 2);
  ASSERT_EQ(transport->requests.size(), 1u);
  const HttpRequest& req = transport->requests[0];
  EXPECT_EQ(req.endpoint.host, "llm.example.test");
  const auto body = nlohmann::json::parse(req.body);
  EXPECT_EQ(body["model"], "gpt-4o-mini");
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], "prompt text");
  EXPECT_EQ(body["temperature"], 0.7);
  EXPECT_EQ(req.body.find("sk-test-123"), std::string::npos);
  bool auth = false;
  for (const auto& [k, v] : req.headers) {
    auth |= k == "Authorization" && v == "Bearer sk-test-123";
  }
  EXPECT_TRUE(auth);
}

TEST(ChatCompletions, RetriesTransientErrorsWithBackoff) {
  KeyEnv key("k");
  auto transport = std::make_shared<FakeTransport>(
      std::deque<HttpReply>{{0, "", "connection reset"}, {429, "", ""}, {503, "", ""}, ok_reply("done")});
  RecordingSleep sleep;
  ChatCompletionsProvider p(test_llm(), transport, sleep.policy());
  const RawResponse r = p.evaluate({prompt("a"), 0});
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(transport->requests.size(), 4u);
  ASSERT_EQ(sleep.delays.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto lo = std::chrono::milliseconds(1000 << k);
    EXPECT_GE(sleep.delays[k], lo);
    EXPECT_LE(sleep.delays[k], lo + lo / 4);
  }
}

TEST(ChatCompletions, GivesUpAfterMaxRetries) {
  KeyEnv key("k");
  auto transport = std::make_shared<FakeTransport>(std::deque<HttpReply>{});
  RecordingSleep sleep;
  ChatCompletionsProvider p(test_llm(), transport, sleep.policy());
  const RawResponse r = p.evaluate({prompt("a"), 0});
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failure_reason, "HTTP 500");
  EXPECT_EQ(transport->requests.size(), 4u);
}

TEST(ChatCompletions, AuthErrorsAreFatal) {
  KeyEnv key("k");
  for (int status : {401, 403}) {
    auto transport = std::make_shared<FakeTransport>(std::deque<HttpReply>{{status, "denied", ""}});
    ChatCompletionsProvider p(test_llm(), transport);
    EXPECT_THROW(p.evaluate({prompt("a"), 0}), AuthError);
    EXPECT_EQ(transport->requests.size(), 1u);
  }
}

TEST(ChatCompletions, ClientErrorsAndMalformedBodiesFailWithoutRetry) {
  KeyEnv key("k");
  for (const HttpReply& reply : {HttpReply{400, "bad", ""}, HttpReply{200, "{not json", ""},
                                 HttpReply{200, "{\"choices\": []}", ""}, ok_reply("")}) {
    auto transport = std::make_shared<FakeTransport>(std::deque<HttpReply>{reply});
    ChatCompletionsProvider p(test_llm(), transport);
    const RawResponse r = p.evaluate({prompt("a"), 0});
    EXPECT_FALSE(r.ok()) << reply.body;
    EXPECT_FALSE(r.failure_reason.empty());
    EXPECT_EQ(transport->requests.size(), 1u);
  }
}

TEST(CacheStore, KeyDependsOnEveryComponent) {
  const std::string k = CacheStore::make_key("m", 0.7, "p", 0);
  EXPECT_EQ(k.size(), 64u);
  EXPECT_EQ(k, CacheStore::make_key("m", 0.7, "p", 0));
  EXPECT_NE(k, CacheStore::make_key("m2", 0.7, "p", 0));
  EXPECT_NE(k, CacheStore::make_key("m", 0.2, "p", 0));
  EXPECT_NE(k, CacheStore::make_key("m", 0.7, "q", 0));
  EXPECT_NE(k, CacheStore::make_key("m", 0.7, "p", 1));
}

TEST(CacheStore, PersistsOkResponsesLastWins) {
  TempDir dir("cache");
  const auto file = dir / "c.jsonl";
  {
    CacheStore c(file);
    c.put("k1", RawResponse{"p", 0, "first", 5, Outcome::ok, ""});
    c.put("k1", RawResponse{"p", 0, "second", 5, Outcome::ok, ""});
    c.put("k2", RawResponse{"p", 1, "", 5, Outcome::provider_failure, "boom"});
    EXPECT_EQ(c.size(), 1u);
  }
  {
    std::ofstream torn(file, std::ios::app);
    torn << "{\"key\": \"k3\", \"resp";
  }
  CacheStore reloaded(file);
  EXPECT_EQ(reloaded.size(), 1u);
  EXPECT_EQ(reloaded.skipped_lines(), 1u);
  ASSERT_TRUE(reloaded.get("k1").has_value());
  EXPECT_EQ(reloaded.get("k1")->text, "second");
  EXPECT_FALSE(reloaded.get("k2").has_value());
}

namespace {

class SlowProvider : public Provider {
 public:
  RawResponse evaluate(const EvaluationRequest& req) override {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    ++calls;
    return RawResponse{req.prompt.prompt_id, req.repetition_index, "Realism: Realistic", 5, Outcome::ok, ""};
  }
  std::string model_id() const override { return "slow"; }
  double temperature() const override { return 0.0; }

  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  std::atomic<int> calls{0};
};

}  // namespace

TEST(Gateway, BoundsConcurrencyAndKeepsOrder) {
  for (int limit : {1, 3, 8}) {
    SlowProvider provider;
    CacheStore cache;
    Gateway g(provider, cache, limit);
    std::vector<PromptInstance> prompts;
    for (int i = 0; i < 6; ++i) {
      prompts.push_back(prompt("v" + std::to_string(i)));
    }
    const auto responses = g.run_all(prompts, 4);
    ASSERT_EQ(responses.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
      ASSERT_EQ(responses[i].size(), 4u);
      for (int r = 0; r < 4; ++r) {
        EXPECT_EQ(responses[i][r].repetition_index, r);
        EXPECT_EQ(responses[i][r].prompt_id, prompts[i].prompt_id);
      }
    }
    EXPECT_LE(provider.peak.load(), limit);
    EXPECT_LE(g.stats().peak_in_flight, static_cast<std::size_t>(limit));
    EXPECT_GE(g.stats().peak_in_flight, 1u);
    EXPECT_EQ(g.stats().provider_calls, 24u);
    EXPECT_EQ(g.stats().cache_misses, 24u);
  }
}

TEST(Gateway, SecondRunIsServedFromCache) {
  TempDir dir("gw");
  std::vector<PromptInstance> prompts = {prompt("a"), prompt("b")};
  MockProvider first(MockSpec::parse("bernoulli:0.5:9"));
  std::vector<std::vector<RawResponse>> before;
  {
    CacheStore cache(dir / "c.jsonl");
    Gateway g(first, cache, 4);
    before = g.run_all(prompts, 5);
    EXPECT_EQ(first.call_count(), 10u);
  }
  MockProvider second(MockSpec::parse("bernoulli:0.5:9"));
  CacheStore cache(dir / "c.jsonl");
  Gateway g(second, cache, 4);
  const auto after = g.run_all(prompts, 5);
  EXPECT_EQ(second.call_count(), 0u);
  EXPECT_EQ(g.stats().cache_hits, 10u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t r = 0; r < 5; ++r) {
      EXPECT_EQ(after[i][r].text, before[i][r].text);
    }
  }
}

TEST(Gateway, FailuresAreRecordedAndNotCached) {
  MockProvider failing(MockSpec::parse("failing:1"));
  CacheStore cache;
  Gateway g(failing, cache, 2);
  const auto rs = g.run_repetitions(prompt("a"), 3);
  ASSERT_EQ(rs.size(), 3u);
  for (const auto& r : rs) {
    EXPECT_FALSE(r.ok());
  }
  EXPECT_EQ(g.stats().provider_failures, 3u);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(Gateway, ProviderExceptionsPropagate) {
  TempDir dir("empty_script");
  write_text_file(dir / "fx.json", "{\"responses\": []}");
  MockProvider scripted(MockSpec::parse("scripted:" + (dir / "fx.json").string()));
  CacheStore cache;
  Gateway g(scripted, cache, 2);
  EXPECT_THROW(g.run_repetitions(prompt("a"), 2), FixtureError);
  EXPECT_THROW(g.run_repetitions(prompt("a"), 0), ConfigError);
}

TEST(MockSpec, ParseAndPrint) {
  EXPECT_EQ(MockSpec::parse("realistic").kind, MockSpec::Kind::always_realistic);
  EXPECT_EQ(MockSpec::parse("unrealistic:3").confidence, 3);
  const MockSpec b = MockSpec::parse("bernoulli:0.25:17");
  EXPECT_EQ(b.kind, MockSpec::Kind::bernoulli);
  EXPECT_DOUBLE_EQ(b.p, 0.25);
  EXPECT_EQ(b.rng_seed, 17u);
  EXPECT_EQ(MockSpec::parse(b.to_string()), b);
  EXPECT_EQ(MockSpec::parse("failing:0.5").kind, MockSpec::Kind::failing);
  EXPECT_EQ(MockSpec::parse("scripted:/tmp/x.json").fixture, "/tmp/x.json");
  for (const char* bad : {"", "sometimes", "bernoulli", "bernoulli:1.5", "failing:-0.1", "realistic:11", "scripted:"}) {
    EXPECT_THROW(MockSpec::parse(bad), ConfigError) << bad;
  }
}

TEST(MockProvider, RepliesFollowTheContract) {
  MockProvider yes(MockSpec::parse("realistic"));
  MockProvider no(MockSpec::parse("unrealistic:4"));
  const auto a = parse_response(yes.evaluate({prompt("x"), 0}).text);
  const auto b = parse_response(no.evaluate({prompt("x"), 0}).text);
  ASSERT_TRUE(std::holds_alternative<Verdict>(a));
  ASSERT_TRUE(std::holds_alternative<Verdict>(b));
  EXPECT_TRUE(std::get<Verdict>(a).realistic);
  EXPECT_EQ(std::get<Verdict>(a).confidence, 8);
  EXPECT_FALSE(std::get<Verdict>(b).realistic);
  EXPECT_EQ(std::get<Verdict>(b).confidence, 4);
  EXPECT_EQ(yes.model_id(), "mock/realistic:8");
}

TEST(MockProvider, BernoulliIsAPureFunctionOfPromptAndRepetition) {
  MockProvider m1(MockSpec::parse("bernoulli:0.3:5"));
  MockProvider m2(MockSpec::parse("bernoulli:0.3:5"));
  int realistic = 0;
  for (int i = 0; i < 400; ++i) {
    const PromptInstance p = prompt("v" + std::to_string(i));
    const RawResponse a = m1.evaluate({p, i % 5});
    EXPECT_EQ(a.text, m2.evaluate({p, i % 5}).text);
    realistic += std::get<Verdict>(parse_response(a.text)).realistic;
  }
  EXPECT_NEAR(realistic / 400.0, 0.3, 0.08);
}

TEST(MockProvider, ScriptedFixtureLookup) {
  TempDir dir("script");
  const PromptInstance p = prompt("s/original");
  nlohmann::json fx{{"default", contract_reply(true, 9, "default")},
                    {"responses",
                     {{{"variant_id", "s/original"}, {"repetition_index", 1}, {"text", contract_reply(false, 2, "v")}},
                      {{"prompt_id", p.prompt_id}, {"repetition_index", 1}, {"text", contract_reply(true, 1, "p")}},
                      {{"variant_id", "s/original"}, {"repetition_index", 2}, {"failure", "scripted outage"}}}}};
  write_text_file(dir / "fx.json", fx.dump());
  MockProvider m(MockSpec::parse("scripted:" + (dir / "fx.json").string()));
  EXPECT_EQ(m.evaluate({p, 0}).text, contract_reply(true, 9, "default"));
  EXPECT_EQ(m.evaluate({p, 1}).text, contract_reply(true, 1, "p"));
  EXPECT_EQ(m.evaluate({prompt("s/original", "other text"), 1}).text, contract_reply(false, 2, "v"));
  const RawResponse f = m.evaluate({p, 2});
  EXPECT_FALSE(f.ok());
  EXPECT_EQ(f.failure_reason, "scripted outage");

  write_text_file(dir / "broken.json", "{\"responses\": 3}");
  EXPECT_THROW(MockProvider(MockSpec::parse("scripted:" + (dir / "broken.json").string())), FixtureError);
  EXPECT_THROW(MockProvider(MockSpec::parse("scripted:" + (dir / "missing.json").string())), FixtureError);
}
