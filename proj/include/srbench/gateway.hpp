#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "srbench/verbalizer.hpp"

namespace srbench {

struct LlmConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string model_id = "gpt-4o-mini";
  double temperature = 0.7;
  int max_tokens = 512;
  std::string api_key_env = "OPENAI_API_KEY";
  int max_in_flight = 4;
  int max_retries = 3;
  double timeout_s = 60.0;

  /// Throws ConfigError on a malformed endpoint or out-of-range field.
  void validate() const;

  friend bool operator==(const LlmConfig&, const LlmConfig&) = default;
};

struct Endpoint {
  std::string scheme;  // http or https
  std::string host;
  int port = 0;
  std::string path;

  /// "scheme://host:port"
  std::string origin() const;
};

/// Throws ConfigError unless `url` is http(s)://host[:port][/path].
Endpoint parse_endpoint(const std::string& url);

struct EvaluationRequest {
  PromptInstance prompt;
  int repetition_index = 0;
};

enum class Outcome { ok, provider_failure };

struct RawResponse {
  std::string prompt_id;
  int repetition_index = 0;
  std::string text;
  std::int64_t latency_ms = 0;
  Outcome outcome = Outcome::ok;
  std::string failure_reason;  // set when outcome == provider_failure

  bool ok() const noexcept { return outcome == Outcome::ok; }

  friend bool operator==(const RawResponse&, const RawResponse&) = default;
};

/// Something that answers one prompt repetition. Implementations must be
/// safe to call from several threads at once.
class Provider {
 public:
  virtual ~Provider() = default;

  virtual RawResponse evaluate(const EvaluationRequest& req) = 0;

  /// Identity that enters cache keys, e.g. the model id.
  virtual std::string model_id() const = 0;
  virtual double temperature() const = 0;
};

// --- transport ---------------------------------------------------------------

struct HttpRequest {
  Endpoint endpoint;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
  double timeout_s = 60.0;
};

/// status == 0 means the request never produced an HTTP response.
struct HttpReply {
  int status = 0;
  std::string body;
  std::string error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const HttpRequest& req) = 0;
};

/// cpp-httplib backed transport (HTTPS via OpenSSL).
std::shared_ptr<Transport> make_http_transport();

struct RetryPolicy {
  std::chrono::milliseconds base{1000};
  double factor = 2.0;
  double jitter = 0.25;  // delay *= 1 + jitter * u, u in [0, 1)
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for

  std::chrono::milliseconds delay_for(int attempt, std::string_view salt) const;
};

/// OpenAI-compatible chat completions client.
///
/// One POST per attempt with {model, messages:[{role:"user", content}],
/// temperature, max_tokens}; the reply text is choices[0].message.content.
/// Transport errors, 429 and 5xx are retried with exponential backoff up to
/// max_retries; 401/403 throw AuthError at once. Other statuses and
/// malformed bodies become provider_failure without retry.
class ChatCompletionsProvider final : public Provider {
 public:
  /// Reads the API key from the environment variable named by
  /// cfg.api_key_env; throws ConfigError when it is unset or empty.
  ChatCompletionsProvider(LlmConfig cfg, std::shared_ptr<Transport> transport, RetryPolicy policy = {});

  RawResponse evaluate(const EvaluationRequest& req) override;
  std::string model_id() const override { return cfg_.model_id; }
  double temperature() const override { return cfg_.temperature; }

  std::string request_body(const EvaluationRequest& req) const;

 private:
  LlmConfig cfg_;
  Endpoint endpoint_;
  std::shared_ptr<Transport> transport_;
  RetryPolicy policy_;
  std::string api_key_;
};

// --- cache -------------------------------------------------------------------

/// Persistent store of ok responses, one JSON object per line. Later lines
/// win on duplicate keys. All access is serialized through one mutex.
class CacheStore {
 public:
  /// Memory-only cache.
  CacheStore() = default;
  /// Loads `file` if present; puts append to it.
  explicit CacheStore(std::filesystem::path file);

  static std::string make_key(const std::string& model_id, double temperature, const std::string& prompt_id,
                              int repetition_index);

  std::optional<RawResponse> get(const std::string& key) const;
  /// Ignores responses whose outcome is not ok.
  void put(const std::string& key, const RawResponse& response);
  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_lines_; }

 private:
  std::filesystem::path file_;
  mutable std::mutex mu_;
  std::map<std::string, RawResponse> entries_;
  std::size_t skipped_lines_ = 0;
};

// --- gateway -----------------------------------------------------------------

struct GatewayStats {
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t provider_calls = 0;
  std::size_t provider_failures = 0;
  std::size_t peak_in_flight = 0;
};

/// Runs prompt repetitions against a provider with at most `max_in_flight`
/// concurrent calls, consulting and filling the cache.
class Gateway {
 public:
  Gateway(Provider& provider, CacheStore& cache, int max_in_flight);

  /// Responses for repetition indices 0..repetitions-1, in index order.
  std::vector<RawResponse> run_repetitions(const PromptInstance& prompt, int repetitions);

  /// Same as run_repetitions for every prompt, sharing one worker pool.
  std::vector<std::vector<RawResponse>> run_all(std::span<const PromptInstance> prompts, int repetitions);

  GatewayStats stats() const;

 private:
  Provider& provider_;
  CacheStore& cache_;
  int max_in_flight_;
  mutable std::mutex mu_;
  GatewayStats stats_;
};

// --- mocks -------------------------------------------------------------------

struct MockSpec {
  enum class Kind { always_realistic, always_unrealistic, scripted, bernoulli, failing };

  Kind kind = Kind::always_realistic;
  int confidence = 8;
  double p = 0.5;             // bernoulli: probability of "Realistic"; failing: failure fraction
  std::uint64_t rng_seed = 0;
  std::filesystem::path fixture;

  /// Parses the --mock syntax:
  ///   realistic[:CONF] | unrealistic[:CONF] | bernoulli:P[:SEED]
  ///   | scripted:PATH | failing:FRACTION[:SEED]
  static MockSpec parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const MockSpec&, const MockSpec&) = default;
};

/// Deterministic offline provider. Every reply is a pure function of
/// (prompt_id, repetition_index), so results do not depend on scheduling.
class MockProvider final : public Provider {
 public:
  explicit MockProvider(MockSpec spec);

  RawResponse evaluate(const EvaluationRequest& req) override;
  std::string model_id() const override { return "mock/" + spec_.to_string(); }
  double temperature() const override { return 0.0; }

  std::size_t call_count() const noexcept { return calls_.load(); }
  const MockSpec& spec() const noexcept { return spec_; }

 private:
  struct ScriptEntry {
    std::string text;
    std::optional<std::string> failure;
  };

  MockSpec spec_;
  std::map<std::string, ScriptEntry> script_;  // "<prompt_id or variant_id>#<rep>"
  std::optional<std::string> script_default_;
  std::atomic<std::size_t> calls_{0};
};

std::unique_ptr<MockProvider> make_mock_provider(const MockSpec& spec);

/// Three-line reply in the answer contract format.
std::string contract_reply(bool realistic, int confidence, std::string_view reason);

}  // namespace srbench
