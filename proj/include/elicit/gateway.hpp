#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <openssl/sha.h>

#include "httplib.h"
#include "json.hpp"

#include "elicit/text.hpp"

namespace elicit {

// ---------------------------------------------------------------------------
// Request / response types
// ---------------------------------------------------------------------------

enum class RoleTag { policy, oracle, writer, judge, distiller };
enum class Speaker { system, user, assistant };
enum class GatewayMode { live, record, replay };

inline const char* to_string(RoleTag r) {
  switch (r) {
    case RoleTag::policy: return "policy";
    case RoleTag::oracle: return "oracle";
    case RoleTag::writer: return "writer";
    case RoleTag::judge: return "judge";
    case RoleTag::distiller: return "distiller";
  }
  return "?";
}

inline const char* to_string(Speaker s) {
  switch (s) {
    case Speaker::system: return "system";
    case Speaker::user: return "user";
    case Speaker::assistant: return "assistant";
  }
  return "?";
}

inline const char* to_string(GatewayMode m) {
  switch (m) {
    case GatewayMode::live: return "live";
    case GatewayMode::record: return "record";
    case GatewayMode::replay: return "replay";
  }
  return "?";
}

inline GatewayMode gateway_mode_from_string(const std::string& s) {
  if (s == "live") return GatewayMode::live;
  if (s == "record") return GatewayMode::record;
  if (s == "replay") return GatewayMode::replay;
  throw std::invalid_argument("unknown gateway mode: " + s);
}

struct ChatMessage {
  Speaker speaker = Speaker::user;
  std::string text;
};

struct ChatRequest {
  RoleTag role_tag = RoleTag::policy;
  std::string model_name;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 2048;

  /// Content hash over every field; the cache and replay identity.
  std::string request_key() const;
};

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  TokenUsage usage;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char b : digest) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xf]);
  }
  return out;
}

inline std::string ChatRequest::request_key() const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages)
    msgs.push_back({{"speaker", to_string(m.speaker)}, {"text", m.text}});
  nlohmann::json canonical{{"role_tag", to_string(role_tag)},
                           {"model_name", model_name},
                           {"messages", std::move(msgs)},
                           {"temperature", temperature},
                           {"max_output_tokens", max_output_tokens}};
  return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ModelEndpoint {
  std::string url;  // full URL, e.g. http://host:port/v1/chat/completions
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  int timeout_ms = 30000;
  int retries = 3;
};

struct GatewayConfig {
  GatewayMode mode = GatewayMode::replay;
  std::map<std::string, ModelEndpoint> models;
  std::string credential_env = "ELICIT_API_KEY";
  std::string cache_path;  // required in record/replay modes
  int max_in_flight = 4;
  int backoff_base_ms = 200;
  int backoff_max_ms = 10000;
  std::uint64_t jitter_seed = 0;  // 0: seed from random_device
};

class GatewayError : public std::runtime_error {
 public:
  enum class Kind { config, transport, content, replay_miss };

  GatewayError(Kind kind, std::string request_key, const std::string& message)
      : std::runtime_error(message + (request_key.empty() ? "" : " [request_key=" + request_key + "]")),
        kind_(kind),
        request_key_(std::move(request_key)) {}

  Kind kind() const { return kind_; }
  const std::string& request_key() const { return request_key_; }

 private:
  Kind kind_;
  std::string request_key_;
};

// ---------------------------------------------------------------------------
// FIFO in-flight limiter
// ---------------------------------------------------------------------------

/// Admits waiters strictly in arrival order; at most `ceiling` run at once.
class FifoLimiter {
 public:
  explicit FifoLimiter(int ceiling) : ceiling_(ceiling < 1 ? 1 : ceiling) {}

  class Guard {
   public:
    explicit Guard(FifoLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Guard() { limiter_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    FifoLimiter& limiter_;
  };

 private:
  void acquire() {
    std::unique_lock<std::mutex> lock(mu_);
    const std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return ticket < completed_ + static_cast<std::uint64_t>(ceiling_); });
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++completed_;
    }
    cv_.notify_all();
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t completed_ = 0;
  int ceiling_;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

/// Shared client for every model-backed role. One instance per process is
/// enough: it is thread-safe and bounds in-flight requests via FifoLimiter.
///
/// Modes:
///   live   — network allowed; temperature-0 requests are memoized in-process.
///   record — network allowed; every (request_key, response) pair is persisted
///            to the cache file, and repeats are served from cache.
///   replay — network forbidden; a cache miss is a hard error naming the key.
class LlmGateway {
 public:
  explicit LlmGateway(GatewayConfig config) : config_(std::move(config)), mode_(config_.mode) {
    validate_mode(config_.mode);
    std::uint64_t seed = config_.jitter_seed ? config_.jitter_seed : std::random_device{}();
    jitter_rng_.seed(seed);
    limiter_ = std::make_unique<FifoLimiter>(config_.max_in_flight);
    if (!config_.cache_path.empty()) load_cache_file();
  }

  ChatResponse complete(const ChatRequest& request) {
    const std::string key = request.request_key();

    if (cacheable_read(request)) {
      std::lock_guard<std::mutex> lock(cache_mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) {
        cache_hits_.fetch_add(1);
        ChatResponse r = it->second;
        r.from_cache = true;
        r.latency_ms = 0;
        return r;
      }
    }
    if (mode() == GatewayMode::replay)
      throw GatewayError(GatewayError::Kind::replay_miss, key,
                         "replay cache miss for " + std::string(to_string(request.role_tag)) +
                             " request against model '" + request.model_name + "'");

    ChatResponse response = perform(request, key);
    if (cacheable_write(request)) store(key, response);
    return response;
  }

  void set_mode(GatewayMode mode) {
    validate_mode(mode);
    mode_.store(mode);
  }

  GatewayMode mode() const { return mode_.load(); }

  std::int64_t network_attempts() const { return network_attempts_.load(); }
  std::int64_t cache_hits() const { return cache_hits_.load(); }
  std::int64_t throttle_retries() const { return throttle_retries_.load(); }

 private:
  void validate_mode(GatewayMode mode) const {
    if (mode == GatewayMode::live) {
      bool any_auth = false;
      for (const auto& [name, ep] : config_.models)
        if (!ep.auth_header.empty()) any_auth = true;
      if (any_auth && !std::getenv(config_.credential_env.c_str()))
        throw GatewayError(GatewayError::Kind::config, "",
                           "live mode requires credentials in $" + config_.credential_env);
    }
    if (mode != GatewayMode::live && config_.cache_path.empty())
      throw GatewayError(GatewayError::Kind::config, "",
                         "record/replay modes require a cache_path");
  }

  bool cacheable_read(const ChatRequest& request) const {
    return mode() != GatewayMode::live || request.temperature == 0.0;
  }
  bool cacheable_write(const ChatRequest& request) const {
    if (mode() == GatewayMode::record) return true;
    return mode() == GatewayMode::live && request.temperature == 0.0;
  }

  const ModelEndpoint& endpoint_for(const ChatRequest& request, const std::string& key) const {
    auto it = config_.models.find(request.model_name);
    if (it == config_.models.end())
      throw GatewayError(GatewayError::Kind::config, key,
                         "no endpoint configured for model '" + request.model_name + "'");
    return it->second;
  }

  // Full URL -> (scheme://host:port, /path)
  static std::pair<std::string, std::string> split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    std::size_t path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
  }

  ChatResponse perform(const ChatRequest& request, const std::string& key) {
    const ModelEndpoint& ep = endpoint_for(request, key);
    auto [base, path] = split_url(ep.url);

    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : request.messages)
      msgs.push_back({{"role", to_string(m.speaker)}, {"content", m.text}});
    const std::string body = nlohmann::json{{"model", request.model_name},
                                            {"messages", std::move(msgs)},
                                            {"temperature", request.temperature},
                                            {"max_tokens", request.max_output_tokens}}
                                 .dump();

    httplib::Headers headers;
    if (!ep.auth_header.empty()) {
      if (const char* cred = std::getenv(config_.credential_env.c_str()))
        headers.emplace(ep.auth_header, ep.auth_prefix + cred);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= ep.retries; ++attempt) {
      if (attempt > 0) {
        throttle_retries_.fetch_add(1);
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms(attempt)));
      }

      FifoLimiter::Guard guard(*limiter_);
      network_attempts_.fetch_add(1);
      const auto t0 = std::chrono::steady_clock::now();

      httplib::Client client(base);
      client.set_connection_timeout(0, ep.timeout_ms * 1000);
      client.set_read_timeout(ep.timeout_ms / 1000, (ep.timeout_ms % 1000) * 1000);
      auto result = client.Post(path, headers, body, "application/json");

      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();

      if (!result) {
        last_error = "transport failure: " + httplib::to_string(result.error());
        continue;  // retryable
      }
      const int status = result->status;
      if (status == 429 || status >= 500) {
        last_error = "status " + std::to_string(status);
        continue;  // retryable
      }
      if (status != 200)
        throw GatewayError(GatewayError::Kind::content, key,
                           "provider refused request (status " + std::to_string(status) + ")");
      return parse_body(result->body, key, elapsed);
    }
    throw GatewayError(GatewayError::Kind::transport, key,
                       "exhausted " + std::to_string(1 + ep.retries) + " attempts; last: " + last_error);
  }

  static ChatResponse parse_body(const std::string& body, const std::string& key,
                                 std::int64_t latency_ms) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const std::exception& e) {
      throw GatewayError(GatewayError::Kind::content, key,
                         std::string("malformed provider response: ") + e.what());
    }
    if (j.contains("error"))
      throw GatewayError(GatewayError::Kind::content, key,
                         "provider error: " + j["error"].dump());
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
      throw GatewayError(GatewayError::Kind::content, key, "provider response has no choices");
    ChatResponse r;
    r.text = j["choices"][0].value("message", nlohmann::json::object()).value("content", "");
    if (j.contains("usage")) {
      r.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      r.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    r.latency_ms = latency_ms;
    return r;
  }

  int backoff_ms(int attempt) {
    std::int64_t base = config_.backoff_base_ms;
    std::int64_t delay = base << (attempt - 1);
    if (delay > config_.backoff_max_ms) delay = config_.backoff_max_ms;
    std::lock_guard<std::mutex> lock(rng_mu_);
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    return static_cast<int>(static_cast<double>(delay) * jitter(jitter_rng_));
  }

  void store(const std::string& key, const ChatResponse& response) {
    std::lock_guard<std::mutex> lock(cache_mu_);
    auto [it, inserted] = cache_.emplace(key, response);
    if (!inserted) return;
    if (mode() == GatewayMode::record && !config_.cache_path.empty()) {
      if (!cache_out_.is_open()) {
        cache_out_.open(config_.cache_path, std::ios::app);
        if (!cache_out_)
          throw GatewayError(GatewayError::Kind::config, key,
                             "cannot open cache file for writing: " + config_.cache_path);
      }
      cache_out_ << nlohmann::json{{"request_key", key},
                                   {"response",
                                    {{"text", response.text},
                                     {"prompt_tokens", response.usage.prompt_tokens},
                                     {"completion_tokens", response.usage.completion_tokens}}}}
                        .dump()
                 << "\n";
      cache_out_.flush();
    }
  }

  void load_cache_file() {
    std::ifstream in(config_.cache_path);
    if (!in) return;  // no recordings yet; replay misses surface per-request
    std::string line;
    while (std::getline(in, line)) {
      if (normalize_ws(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line);
      ChatResponse r;
      r.text = j["response"].value("text", "");
      r.usage.prompt_tokens = j["response"].value("prompt_tokens", 0);
      r.usage.completion_tokens = j["response"].value("completion_tokens", 0);
      cache_[j["request_key"].get<std::string>()] = std::move(r);
    }
  }

  GatewayConfig config_;
  std::atomic<GatewayMode> mode_;
  std::unique_ptr<FifoLimiter> limiter_;
  std::map<std::string, ChatResponse> cache_;
  std::mutex cache_mu_;
  std::ofstream cache_out_;
  std::mt19937_64 jitter_rng_;
  std::mutex rng_mu_;
  std::atomic<std::int64_t> network_attempts_{0};
  std::atomic<std::int64_t> cache_hits_{0};
  std::atomic<std::int64_t> throttle_retries_{0};
};

// ---------------------------------------------------------------------------
// Config file ([gateway] and [model.<name>] sections, key = value lines)
// ---------------------------------------------------------------------------

inline std::map<std::string, std::map<std::string, std::string>> parse_ini(std::istream& in) {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string line, section;
  while (std::getline(in, line)) {
    std::string_view v = trim_view(line);
    if (v.empty() || v[0] == '#' || v[0] == ';') continue;
    if (v.front() == '[' && v.back() == ']') {
      section = std::string(trim_view(v.substr(1, v.size() - 2)));
      continue;
    }
    std::size_t eq = v.find('=');
    if (eq == std::string_view::npos) continue;
    std::string k = std::string(trim_view(v.substr(0, eq)));
    std::string val = std::string(trim_view(v.substr(eq + 1)));
    if (!val.empty() && val.front() == '"' && val.back() == '"' && val.size() >= 2)
      val = val.substr(1, val.size() - 2);
    sections[section][k] = val;
  }
  return sections;
}

/// Read gateway settings and per-model endpoints from an INI-style file.
/// Unrelated sections are ignored, so run settings can share the same file.
inline GatewayConfig load_gateway_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GatewayError(GatewayError::Kind::config, "", "cannot open config file: " + path);
  auto sections = parse_ini(in);

  GatewayConfig cfg;
  if (auto it = sections.find("gateway"); it != sections.end()) {
    const auto& kv = it->second;
    auto get = [&](const char* k) -> std::optional<std::string> {
      auto f = kv.find(k);
      if (f == kv.end()) return std::nullopt;
      return f->second;
    };
    if (auto v = get("credential_env")) cfg.credential_env = *v;
    if (auto v = get("cache_path")) cfg.cache_path = *v;
    if (auto v = get("max_in_flight")) cfg.max_in_flight = std::stoi(*v);
    if (auto v = get("backoff_base_ms")) cfg.backoff_base_ms = std::stoi(*v);
    if (auto v = get("backoff_max_ms")) cfg.backoff_max_ms = std::stoi(*v);
    if (auto v = get("jitter_seed")) cfg.jitter_seed = std::stoull(*v);
  }
  for (const auto& [name, kv] : sections) {
    constexpr std::string_view prefix = "model.";
    if (name.rfind(prefix, 0) != 0) continue;
    ModelEndpoint ep;
    auto get = [&](const char* k) -> std::optional<std::string> {
      auto f = kv.find(k);
      if (f == kv.end()) return std::nullopt;
      return f->second;
    };
    if (auto v = get("endpoint")) ep.url = *v;
    if (auto v = get("auth_header")) ep.auth_header = *v;
    if (auto v = get("auth_prefix")) ep.auth_prefix = *v;
    if (auto v = get("timeout_ms")) ep.timeout_ms = std::stoi(*v);
    if (auto v = get("retries")) ep.retries = std::stoi(*v);
    cfg.models[name.substr(prefix.size())] = std::move(ep);
  }
  return cfg;
}

}  // namespace elicit
