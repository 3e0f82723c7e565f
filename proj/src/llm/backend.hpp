#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "common/json.hpp"
#include "common/rng.hpp"
#include "env/environment.hpp"

namespace gameharness::llm {

struct Message {
  std::string role;  // "system" or "user"
  std::string content;
  std::optional<std::vector<std::uint8_t>> image;  // PNG, user messages only
  friend bool operator==(const Message&, const Message&) = default;
};

// Game state handed to in-process oracle backends alongside the prompt. It is
// never serialized onto the wire.
struct OracleContext {
  env::GameState state;
  env::EnvConfig config;
};

struct PromptMessages {
  std::vector<Message> messages;
  std::shared_ptr<const OracleContext> context;

  const Message& system() const { return messages.front(); }
  Message& user() { return messages.at(1); }
  const Message& user() const { return messages.at(1); }
};

// Throws Error{InvalidConfig} unless there is exactly one system message and
// it comes first.
void validate(const PromptMessages& prompt);

struct GenParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::vector<std::string> stop;
};

Json to_json(const GenParams& params);
GenParams gen_params_from_json(const Json& j);

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct Completion {
  std::string text;
  Usage usage;
  double latency_ms = 0.0;
};

struct HealthReport {
  bool healthy = true;
  std::string kind;
  std::string model;
  std::string detail;
};

// Rough token estimate for offline backends: one token per four bytes.
int estimate_tokens(const PromptMessages& prompt);
int estimate_tokens(const std::string& text);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual Completion complete(const PromptMessages& prompt, const GenParams& params) = 0;
  virtual HealthReport probe();
  virtual std::string kind() const = 0;
  virtual std::string model() const = 0;
  // True when results do not depend on wall-clock time or the network.
  virtual bool offline() const { return true; }
};

// ---- offline backends -------------------------------------------------------

class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies, bool cycle = false,
                           std::string name = "scripted");

  Completion complete(const PromptMessages& prompt, const GenParams& params) override;
  std::string kind() const override { return "scripted"; }
  std::string model() const override { return name_; }

  // Every prompt received, in call order.
  std::vector<PromptMessages> calls() const;
  std::size_t call_count() const;

 private:
  std::vector<std::string> replies_;
  bool cycle_;
  std::string name_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
  std::vector<PromptMessages> calls_;
};

// Extracts the tokens of the "Legal moves: a | b | c" trailer line, if any.
std::vector<std::string> parse_legal_trailer(const std::string& user_text);
std::string format_legal_trailer(const std::vector<env::Action>& actions);

class RandomLegalBackend : public Backend {
 public:
  explicit RandomLegalBackend(std::uint64_t seed);
  Completion complete(const PromptMessages& prompt, const GenParams& params) override;
  std::string kind() const override { return "random_legal"; }
  std::string model() const override { return "random_legal"; }

 private:
  std::mutex mutex_;
  Rng rng_;
};

// Chooses the direction maximising immediate merge gain plus the expected
// best follow-up gain over all tile spawns.
env::Direction expectimax_2048(const env::GameState& state);

class Oracle2048Backend : public Backend {
 public:
  Completion complete(const PromptMessages& prompt, const GenParams& params) override;
  std::string kind() const override { return "oracle_2048"; }
  std::string model() const override { return "oracle_2048"; }
};

// Breadth-first search over (player, boxes) for the current level; returns
// the push/walk sequence solving it, or nullopt when none exists within
// `node_limit` expanded states.
std::optional<std::vector<env::Direction>> solve_sokoban(const env::GameState& state,
                                                         std::size_t node_limit = 500000);

class OracleSokobanBackend : public Backend {
 public:
  Completion complete(const PromptMessages& prompt, const GenParams& params) override;
  std::string kind() const override { return "oracle_sokoban"; }
  std::string model() const override { return "oracle_sokoban"; }
};

// ---- HTTP -----------------------------------------------------------------------

struct HttpConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key_env;  // empty: no Authorization header
  double timeout_s = 60.0;
  int max_retries = 3;
  double backoff_initial_s = 1.0;
  double backoff_max_s = 30.0;
  double requests_per_minute = 0.0;  // 0 disables rate limiting
  std::string debug_dir;             // mirror request/response bodies when set
};

Json to_json(const HttpConfig& config);
HttpConfig http_config_from_json(const Json& j);

using Sleeper = std::function<void(std::chrono::duration<double>)>;

// Token bucket shared by every HttpBackend talking to the same base URL.
class RateLimiter {
 public:
  RateLimiter(double per_minute, double burst);
  // Blocks (through `sleep`) until a token is available.
  void acquire(const Sleeper& sleep);

  static std::shared_ptr<RateLimiter> shared_for(const std::string& key, double per_minute);

 private:
  std::mutex mutex_;
  double rate_per_s_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

// Delay before retry `attempt` (0-based): initial * 2^attempt, capped.
double backoff_delay(const HttpConfig& config, int attempt);

class HttpBackend : public Backend {
 public:
  // Throws BackendError{missing_credential} when api_key_env names an unset
  // variable.
  explicit HttpBackend(HttpConfig config, Sleeper sleeper = {});

  Completion complete(const PromptMessages& prompt, const GenParams& params) override;
  HealthReport probe() override;
  std::string kind() const override { return "http"; }
  std::string model() const override { return config_.model; }
  bool offline() const override { return false; }

  // Delays requested from the sleeper so far (retries and rate limiting).
  std::vector<double> sleeps() const;

  static Json request_body(const PromptMessages& prompt, const GenParams& params, const std::string& model);

 private:
  Json post(const Json& body);
  void mirror(const std::string& what, const std::string& payload);
  std::string redact(std::string text) const;

  HttpConfig config_;
  Sleeper sleeper_;
  std::string api_key_;
  std::shared_ptr<RateLimiter> limiter_;
  mutable std::mutex mutex_;
  std::vector<double> sleeps_;
  int mirror_seq_ = 0;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);

// ---- construction from a spec string ----------------------------------------

// Named backend description: "scripted:<asset-or-file>", "random_legal",
// "oracle_2048", "oracle_sokoban" or "http" with an HttpConfig.
struct BackendSpec {
  std::string name;  // label used in records and reports
  std::string kind;
  std::string script;  // scripted: bundled script name or file path
  HttpConfig http;
};

Json to_json(const BackendSpec& spec);
BackendSpec backend_spec_from_json(const Json& j);
// Parses the short CLI form ("scripted:demo", "random_legal", ...).
BackendSpec parse_backend_spec(const std::string& text);

// Builds a fresh backend for one episode. Offline randomness is seeded from
// `seed` so concurrent episodes do not share streams.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::uint64_t seed);

// Loads a scripted reply list: {"cycle": bool, "replies": [...]}.
std::unique_ptr<ScriptedBackend> load_script(const std::string& name_or_path, const std::string& label);

}  // namespace gameharness::llm
