#include <httplib.h>
#include <openssl/evp.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/text.hpp"
#include "llm/backend.hpp"

namespace gameharness::llm {

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Json to_json(const HttpConfig& c) {
  return Json{{"base_url", c.base_url},
              {"model", c.model},
              {"api_key_env", c.api_key_env},
              {"timeout_s", c.timeout_s},
              {"max_retries", c.max_retries},
              {"backoff_initial_s", c.backoff_initial_s},
              {"backoff_max_s", c.backoff_max_s},
              {"requests_per_minute", c.requests_per_minute},
              {"debug_dir", c.debug_dir}};
}

HttpConfig http_config_from_json(const Json& j) {
  HttpConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.model = j.at("model").get<std::string>();
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_initial_s = j.value("backoff_initial_s", c.backoff_initial_s);
    c.backoff_max_s = j.value("backoff_max_s", c.backoff_max_s);
    c.requests_per_minute = j.value("requests_per_minute", c.requests_per_minute);
    c.debug_dir = j.value("debug_dir", c.debug_dir);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad http backend config: ") + e.what());
  }
  if (c.max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (c.timeout_s <= 0) throw Error(ErrorCode::InvalidConfig, "timeout_s must be > 0");
  if (c.backoff_initial_s < 0 || c.backoff_max_s < c.backoff_initial_s)
    throw Error(ErrorCode::InvalidConfig, "backoff bounds must satisfy 0 <= initial <= max");
  return c;
}

// ---- rate limiting ----------------------------------------------------------

RateLimiter::RateLimiter(double per_minute, double burst)
    : rate_per_s_(per_minute / 60.0), burst_(std::max(1.0, burst)), tokens_(std::max(1.0, burst)),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire(const Sleeper& sleep) {
  if (rate_per_s_ <= 0) return;
  for (;;) {
    double wait_s = 0;
    {
      std::lock_guard lock(mutex_);
      const auto now = std::chrono::steady_clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_s_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait_s = (1.0 - tokens_) / rate_per_s_;
    }
    sleep(std::chrono::duration<double>(wait_s));
  }
}

std::shared_ptr<RateLimiter> RateLimiter::shared_for(const std::string& key, double per_minute) {
  static std::mutex registry_mutex;
  static std::map<std::string, std::weak_ptr<RateLimiter>> registry;
  std::lock_guard lock(registry_mutex);
  if (auto existing = registry[key].lock()) return existing;
  auto limiter = std::make_shared<RateLimiter>(per_minute, 1.0);
  registry[key] = limiter;
  return limiter;
}

double backoff_delay(const HttpConfig& config, int attempt) {
  return std::min(config.backoff_max_s, config.backoff_initial_s * std::pow(2.0, attempt));
}

// ---- client -----------------------------------------------------------------

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // request path prefix
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "base_url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
  return e;
}

}  // namespace

HttpBackend::HttpBackend(HttpConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  split_url(config_.base_url);
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key)
      throw BackendError(BackendErrorKind::missing_credential,
                         "environment variable " + config_.api_key_env + " is not set");
    api_key_ = key;
  }
  if (!sleeper_) sleeper_ = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  limiter_ = RateLimiter::shared_for(config_.base_url, config_.requests_per_minute);
}

std::vector<double> HttpBackend::sleeps() const {
  std::lock_guard lock(mutex_);
  return sleeps_;
}

Json HttpBackend::request_body(const PromptMessages& prompt, const GenParams& params, const std::string& model) {
  Json messages = Json::array();
  for (const auto& m : prompt.messages) {
    if (!m.image) {
      messages.push_back({{"role", m.role}, {"content", m.content}});
      continue;
    }
    Json parts = Json::array();
    parts.push_back({{"type", "text"}, {"text", m.content}});
    parts.push_back({{"type", "image_url"},
                     {"image_url", {{"url", "data:image/png;base64," + base64_encode(*m.image)}}}});
    messages.push_back({{"role", m.role}, {"content", parts}});
  }
  Json body{{"model", model}, {"messages", messages}, {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  if (!params.stop.empty()) body["stop"] = params.stop;
  return body;
}

std::string HttpBackend::redact(std::string text) const {
  if (!api_key_.empty()) text = text::replace_all(std::move(text), api_key_, "[REDACTED]");
  return text;
}

void HttpBackend::mirror(const std::string& what, const std::string& payload) {
  if (config_.debug_dir.empty()) return;
  int seq = 0;
  {
    std::lock_guard lock(mutex_);
    seq = mirror_seq_++;
  }
  text::write_file(fmt::format("{}/http/{:05d}-{}.json", config_.debug_dir, seq, what), redact(payload));
}

Json HttpBackend::post(const Json& body) {
  const Endpoint ep = split_url(config_.base_url);
  httplib::Client client(ep.origin);
  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string payload = body.dump();
  mirror("request", payload);
  const auto sleep = [&](std::chrono::duration<double> d) {
    {
      std::lock_guard lock(mutex_);
      sleeps_.push_back(d.count());
    }
    sleeper_(d);
  };

  BackendErrorKind last_kind = BackendErrorKind::network;
  std::string last_message;
  int last_status = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) sleep(std::chrono::duration<double>(backoff_delay(config_, attempt - 1)));
    limiter_->acquire(sleep);
    auto res = client.Post(ep.path + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      last_kind = BackendErrorKind::network;
      last_message = "request to " + ep.origin + " failed: " + httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    mirror("response", res->body);
    if (res->status == 200) {
      try {
        return Json::parse(res->body);
      } catch (const nlohmann::json::exception&) {
        throw BackendError(BackendErrorKind::bad_response, "response body is not JSON", res->status);
      }
    }
    last_status = res->status;
    last_message = fmt::format("HTTP {} from {}: {}", res->status, ep.origin,
                               redact(res->body.substr(0, 300)));
    if (res->status == 429) {
      last_kind = BackendErrorKind::rate_limited_final;
    } else if (res->status >= 500) {
      last_kind = BackendErrorKind::http_status;
    } else {
      throw BackendError(BackendErrorKind::http_status, last_message, res->status);
    }
  }
  throw BackendError(last_kind, last_message, last_status);
}

Completion HttpBackend::complete(const PromptMessages& prompt, const GenParams& params) {
  const auto start = std::chrono::steady_clock::now();
  const Json reply = post(request_body(prompt, params, config_.model));
  Completion c;
  try {
    const auto& content = reply.at("choices").at(0).at("message").at("content");
    c.text = content.is_null() ? "" : content.get<std::string>();
    if (reply.contains("usage") && reply["usage"].is_object()) {
      c.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
      c.usage.completion_tokens = reply["usage"].value("completion_tokens", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(BackendErrorKind::bad_response, std::string("unexpected response shape: ") + e.what());
  }
  c.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return c;
}

HealthReport HttpBackend::probe() {
  PromptMessages ping;
  ping.messages = {{"system", "Reply with the single word: ok", std::nullopt}, {"user", "ping", std::nullopt}};
  GenParams params;
  params.max_tokens = 5;
  const Json reply = post(request_body(ping, params, config_.model));
  HealthReport report{true, kind(), config_.model, ""};
  const std::string served = reply.value("model", std::string());
  report.detail = served.empty() ? "round-trip ok" : "round-trip ok, served by " + served;
  return report;
}

}  // namespace gameharness::llm
