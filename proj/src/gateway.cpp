#include "srbench/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "srbench/errors.hpp"
#include "srbench/hash.hpp"
#include "srbench/numfmt.hpp"

namespace srbench {

using json = nlohmann::json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

// --- config ------------------------------------------------------------------

void LlmConfig::validate() const {
  parse_endpoint(endpoint_url);
  if (model_id.empty()) {
    throw ConfigError("llm.model_id must be nonempty");
  }
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("llm.temperature must be within [0, 2]");
  }
  if (max_tokens < 1) {
    throw ConfigError("llm.max_tokens must be positive");
  }
  if (api_key_env.empty()) {
    throw ConfigError("llm.api_key_env must name an environment variable");
  }
  if (max_in_flight < 1) {
    throw ConfigError("llm.max_in_flight must be positive");
  }
  if (max_retries < 0) {
    throw ConfigError("llm.max_retries must be >= 0");
  }
  if (!(timeout_s > 0.0) || !std::isfinite(timeout_s)) {
    throw ConfigError("llm.timeout_s must be positive");
  }
}

std::string Endpoint::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

Endpoint parse_endpoint(const std::string& url) {
  Endpoint ep;
  const auto sep = url.find("://");
  if (sep == std::string::npos) {
    throw ConfigError("malformed endpoint URL '" + url + "': missing scheme");
  }
  ep.scheme = url.substr(0, sep);
  if (ep.scheme != "http" && ep.scheme != "https") {
    throw ConfigError("malformed endpoint URL '" + url + "': scheme must be http or https");
  }
  const std::string rest = url.substr(sep + 3);
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
  ep.port = ep.scheme == "https" ? 443 : 80;

  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    const std::string port = authority.substr(colon + 1);
    authority.resize(colon);
    if (port.empty() || port.size() > 5 || port.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("malformed endpoint URL '" + url + "': bad port");
    }
    ep.port = std::stoi(port);
    if (ep.port < 1 || ep.port > 65535) {
      throw ConfigError("malformed endpoint URL '" + url + "': port out of range");
    }
  }
  if (authority.empty() || authority.find_first_of(" \t@?#") != std::string::npos) {
    throw ConfigError("malformed endpoint URL '" + url + "': bad host");
  }
  ep.host = authority;
  return ep;
}

std::chrono::milliseconds RetryPolicy::delay_for(int attempt, std::string_view salt) const {
  const double u = hash_to_unit(std::string(salt) + "#" + std::to_string(attempt));
  const double ms = static_cast<double>(base.count()) * std::pow(factor, attempt) * (1.0 + jitter * u);
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

// --- chat completions ----------------------------------------------------------

ChatCompletionsProvider::ChatCompletionsProvider(LlmConfig cfg, std::shared_ptr<Transport> transport,
                                                 RetryPolicy policy)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), policy_(std::move(policy)) {
  cfg_.validate();
  endpoint_ = parse_endpoint(cfg_.endpoint_url);
  const char* key = std::getenv(cfg_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError("API key environment variable " + cfg_.api_key_env + " is not set");
  }
  api_key_ = key;
  if (!policy_.sleep) {
    policy_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::string ChatCompletionsProvider::request_body(const EvaluationRequest& req) const {
  json body;
  body["model"] = cfg_.model_id;
  body["messages"] = json::array({json{{"role", "user"}, {"content", req.prompt.text}}});
  body["temperature"] = cfg_.temperature;
  body["max_tokens"] = cfg_.max_tokens;
  return body.dump();
}

RawResponse ChatCompletionsProvider::evaluate(const EvaluationRequest& req) {
  RawResponse out;
  out.prompt_id = req.prompt.prompt_id;
  out.repetition_index = req.repetition_index;

  HttpRequest http;
  http.endpoint = endpoint_;
  http.body = request_body(req);
  http.timeout_s = cfg_.timeout_s;
  http.headers = {{"Authorization", "Bearer " + api_key_}, {"Content-Type", "application/json"}};

  const std::string salt = req.prompt.prompt_id + "#" + std::to_string(req.repetition_index);
  const auto start = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 0;; ++attempt) {
    const HttpReply reply = transport_->post(http);
    if (reply.status == 401 || reply.status == 403) {
      throw AuthError("provider rejected credentials (HTTP " + std::to_string(reply.status) + ")");
    }
    if (reply.status >= 200 && reply.status < 300) {
      out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                           .count();
      try {
        const json body = json::parse(reply.body);
        const json& content = body.at("choices").at(0).at("message").at("content");
        if (content.is_string() && !content.get<std::string>().empty()) {
          out.text = content.get<std::string>();
          out.outcome = Outcome::ok;
          return out;
        }
        last_error = "empty message content";
      } catch (const json::exception& e) {
        last_error = std::string("malformed response body: ") + e.what();
      }
      break;
    }

    last_error = reply.status == 0 ? "transport error: " + reply.error : "HTTP " + std::to_string(reply.status);
    if (!retryable(reply.status) || attempt >= cfg_.max_retries) {
      break;
    }
    policy_.sleep(policy_.delay_for(attempt, salt));
  }

  out.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  out.outcome = Outcome::provider_failure;
  out.failure_reason = last_error;
  out.text.clear();
  return out;
}

// --- cache -------------------------------------------------------------------

CacheStore::CacheStore(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) {
    return;
  }
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) {
      continue;
    }
    try {
      const json j = json::parse(line);
      const json& r = j.at("response");
      RawResponse resp;
      resp.prompt_id = r.at("prompt_id").get<std::string>();
      resp.repetition_index = r.at("repetition_index").get<int>();
      resp.text = r.at("text").get<std::string>();
      resp.latency_ms = r.at("latency_ms").get<std::int64_t>();
      if (resp.text.empty()) {
        ++skipped_lines_;
        continue;
      }
      entries_[j.at("key").get<std::string>()] = std::move(resp);
    } catch (const json::exception&) {
      // A torn final line from an interrupted run is expected; skip it.
      ++skipped_lines_;
    }
  }
}

std::string CacheStore::make_key(const std::string& model_id, double temperature, const std::string& prompt_id,
                                 int repetition_index) {
  return sha256_hex(model_id + '\x1f' + shortest_repr(temperature) + '\x1f' + prompt_id + '\x1f' +
                    std::to_string(repetition_index));
}

std::optional<RawResponse> CacheStore::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    return std::nullopt;
  }
  return it->second;
}

void CacheStore::put(const std::string& key, const RawResponse& response) {
  if (!response.ok() || response.text.empty()) {
    return;
  }
  std::lock_guard lock(mu_);
  entries_[key] = response;
  if (file_.empty()) {
    return;
  }
  if (file_.has_parent_path()) {
    std::filesystem::create_directories(file_.parent_path());
  }
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) {
    throw IoError("cannot append to cache file " + file_.string());
  }
  const json line = {{"key", key},
                     {"created_at", utc_now()},
                     {"response",
                      {{"prompt_id", response.prompt_id},
                       {"repetition_index", response.repetition_index},
                       {"text", response.text},
                       {"latency_ms", response.latency_ms}}}};
  out << line.dump() << '\n';
}

std::size_t CacheStore::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// --- gateway -----------------------------------------------------------------

Gateway::Gateway(Provider& provider, CacheStore& cache, int max_in_flight)
    : provider_(provider), cache_(cache), max_in_flight_(std::max(1, max_in_flight)) {}

std::vector<RawResponse> Gateway::run_repetitions(const PromptInstance& prompt, int repetitions) {
  return std::move(run_all(std::span<const PromptInstance>(&prompt, 1), repetitions).front());
}

std::vector<std::vector<RawResponse>> Gateway::run_all(std::span<const PromptInstance> prompts, int repetitions) {
  if (repetitions < 1) {
    throw ConfigError("repetitions must be >= 1");
  }
  const std::string model = provider_.model_id();
  const double temperature = provider_.temperature();

  std::vector<std::vector<RawResponse>> out(prompts.size(), std::vector<RawResponse>(repetitions));
  struct Job {
    std::size_t prompt;
    int rep;
    std::string key;
  };
  std::vector<Job> misses;
  std::size_t hits = 0;
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    for (int r = 0; r < repetitions; ++r) {
      std::string key = CacheStore::make_key(model, temperature, prompts[p].prompt_id, r);
      if (auto cached = cache_.get(key)) {
        out[p][static_cast<std::size_t>(r)] = std::move(*cached);
        ++hits;
      } else {
        misses.push_back({p, r, std::move(key)});
      }
    }
  }
  {
    std::lock_guard lock(mu_);
    stats_.cache_hits += hits;
    stats_.cache_misses += misses.size();
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::atomic<std::size_t> in_flight{0};
  std::exception_ptr first_error;
  std::mutex error_mu;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= misses.size()) {
        return;
      }
      const Job& job = misses[i];
      try {
        RawResponse resp;
        {
          struct InFlight {
            std::atomic<std::size_t>& n;
            ~InFlight() { n.fetch_sub(1); }
          } guard{in_flight};
          const std::size_t now = in_flight.fetch_add(1) + 1;
          {
            std::lock_guard lock(mu_);
            stats_.peak_in_flight = std::max(stats_.peak_in_flight, now);
            ++stats_.provider_calls;
          }
          resp = provider_.evaluate(EvaluationRequest{prompts[job.prompt], job.rep});
        }
        resp.prompt_id = prompts[job.prompt].prompt_id;
        resp.repetition_index = job.rep;
        if (resp.ok()) {
          cache_.put(job.key, resp);
        } else {
          std::lock_guard lock(mu_);
          ++stats_.provider_failures;
        }
        out[job.prompt][static_cast<std::size_t>(job.rep)] = std::move(resp);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!first_error) {
          first_error = std::current_exception();
        }
        abort.store(true);
        return;
      }
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight_), misses.size());
  if (n_workers == 1) {
    worker();
  } else if (n_workers > 1) {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) {
      pool.emplace_back(worker);
    }
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
  return out;
}

GatewayStats Gateway::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

}  // namespace srbench
