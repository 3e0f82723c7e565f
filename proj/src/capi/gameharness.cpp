#include "gameharness/gameharness.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <memory>

#include "common/error.hpp"
#include "common/text.hpp"
#include "env/serialization.hpp"
#include "harness/harness.hpp"
#include "llm/backend.hpp"
#include "perception/perception.hpp"
#include "runner/runner.hpp"
#include "stats/stats.hpp"

using namespace gameharness;

struct gh_env {
  env::Environment impl;
};

struct gh_state {
  env::GameState impl;
};

struct gh_backend {
  std::unique_ptr<llm::Backend> impl;
};

namespace {

thread_local std::string last_error;

gh_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::Usage: return GH_ERR_USAGE;
    case ErrorCode::Backend: return GH_ERR_BACKEND;
    case ErrorCode::IllegalAction:
    case ErrorCode::TerminalState:
    case ErrorCode::NonMonotonicTurn:
    case ErrorCode::EmptyBuffer:
    case ErrorCode::NoMoveLine:
    case ErrorCode::InvalidAction:
    case ErrorCode::Forfeit:
    case ErrorCode::MalformedCandidate: return GH_ERR_GAME;
    case ErrorCode::TooFewPairs:
    case ErrorCode::ZeroVarianceDiffs:
    case ErrorCode::ZeroVarianceBaseline: return GH_ERR_STATS;
    default: return GH_ERR_CONFIG;
  }
}

gh_status fail(gh_status status, std::string_view name, const std::string& message, Json extra = Json::object()) {
  Json j{{"status", static_cast<int>(status)}, {"error", name}, {"message", message}};
  for (auto& [k, v] : extra.items()) j[k] = v;
  last_error = j.dump();
  return status;
}

// Runs `fn`, translating exceptions into a status and gh_last_error().
template <typename Fn>
gh_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return GH_OK;
  } catch (const BackendError& e) {
    Json extra{{"kind", to_string(e.kind())}};
    if (e.http_status()) extra["http_status"] = e.http_status();
    return fail(GH_ERR_BACKEND, "Backend", e.what(), extra);
  } catch (const Error& e) {
    return fail(status_of(e.code()), to_string(e.code()), e.what());
  } catch (const Json::exception& e) {
    return fail(GH_ERR_CONFIG, "InvalidConfig", e.what());
  } catch (const std::exception& e) {
    return fail(GH_ERR_INTERNAL, "Internal", e.what());
  }
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::Usage, std::string(what) + " must not be NULL");
}

char* dup(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Json parse(const char* text, const char* what) {
  require(text, what);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " is not valid JSON: " + e.what());
  }
}

env::EnvConfig env_config(const char* json) { return json ? env::env_config_from_json(parse(json, "config")) : env::EnvConfig{}; }

llm::BackendSpec spec_of(const char* spec) {
  require(spec, "backend spec");
  const std::string s(spec);
  if (!s.empty() && s.front() == '{') return llm::backend_spec_from_json(parse(spec, "backend spec"));
  return llm::parse_backend_spec(s);
}

const env::Action& find_action(const std::vector<env::Action>& legal, const char* token) {
  for (const auto& a : legal)
    if (env::to_token(a) == token) return a;
  throw Error(ErrorCode::IllegalAction, std::string("not a legal move here: ") + token);
}

}  // namespace

extern "C" {

void gh_free(char* s) { std::free(s); }

const char* gh_last_error(void) { return last_error.c_str(); }

const char* gh_version(void) { return GH_VERSION; }

gh_status gh_env_create(const char* game, const char* config_json, gh_env** out) {
  return guarded([&] {
    require(game, "game");
    require(out, "out");
    *out = new gh_env{env::Environment(env::parse_game(game), env_config(config_json))};
  });
}

void gh_env_destroy(gh_env* env) { delete env; }

gh_status gh_env_reset(const gh_env* env, uint64_t seed, gh_state** out) {
  return guarded([&] {
    require(env, "env");
    require(out, "out");
    *out = new gh_state{env->impl.reset(seed)};
  });
}

gh_status gh_env_legal_actions(const gh_env* env, const gh_state* state, char** out_json) {
  return guarded([&] {
    require(env, "env");
    require(state, "state");
    require(out_json, "out_json");
    Json j = Json::array();
    for (const auto& a : env->impl.legal_actions(state->impl)) j.push_back(env::to_token(a));
    *out_json = dup(j.dump());
  });
}

gh_status gh_env_step(const gh_env* env, const gh_state* state, const char* action, gh_state** next, double* reward,
                      int* terminal) {
  return guarded([&] {
    require(env, "env");
    require(state, "state");
    require(action, "action");
    const auto legal = env->impl.legal_actions(state->impl);
    auto r = env->impl.step(state->impl, find_action(legal, action));
    if (reward) *reward = r.reward;
    if (terminal) *terminal = r.terminated ? 1 : 0;
    if (next) *next = new gh_state{std::move(r.next_state)};
  });
}

gh_status gh_state_score(const gh_state* state, double* reported) {
  return guarded([&] {
    require(state, "state");
    require(reported, "reported");
    *reported = env::reported_score(state->impl).reported;
  });
}

gh_status gh_state_to_json(const gh_state* state, char** out_json) {
  return guarded([&] {
    require(state, "state");
    require(out_json, "out_json");
    *out_json = dup(env::to_json(state->impl).dump());
  });
}

gh_status gh_state_from_json(const char* json, gh_state** out) {
  return guarded([&] {
    require(out, "out");
    *out = new gh_state{env::state_from_json(parse(json, "state"))};
  });
}

void gh_state_destroy(gh_state* state) { delete state; }

gh_status gh_state_render_text(const gh_state* state, const char* mode, char** out) {
  return guarded([&] {
    require(state, "state");
    require(mode, "mode");
    require(out, "out");
    const auto m = perception::parse_mode(mode);
    if (m != perception::Mode::raw_text && m != perception::Mode::structured_text)
      throw Error(ErrorCode::InvalidConfig, "text rendering needs raw_text or structured_text");
    *out = dup(perception::render_text(state->impl, m == perception::Mode::structured_text));
  });
}

gh_status gh_state_render_png(const gh_state* state, const char* style_json, const char* path) {
  return guarded([&] {
    require(state, "state");
    require(path, "path");
    const auto style = style_json ? perception::parse_style(style_json) : perception::default_style();
    const auto png = perception::render_image(state->impl, style);
    text::write_file(path, std::string(png.begin(), png.end()));
  });
}

gh_status gh_backend_create(const char* spec, uint64_t seed, gh_backend** out) {
  return guarded([&] {
    require(out, "out");
    *out = new gh_backend{llm::make_backend(spec_of(spec), seed)};
  });
}

void gh_backend_destroy(gh_backend* backend) { delete backend; }

gh_status gh_backend_probe(gh_backend* backend, char** out_json) {
  return guarded([&] {
    require(backend, "backend");
    require(out_json, "out_json");
    const auto h = backend->impl->probe();
    *out_json = dup(Json{{"healthy", h.healthy}, {"kind", h.kind}, {"model", h.model}, {"detail", h.detail}}.dump());
  });
}

gh_status gh_play(const char* request_json, char** out_record_json) {
  return guarded([&] {
    require(out_record_json, "out_record_json");
    const auto req = parse(request_json, "request");
    static const std::vector<std::string> keys{"game",     "backend",  "seed", "turn_budget", "condition",
                                               "template", "env",      "fallback", "max_parse_retries",
                                               "enriched_perception"};
    for (const auto& [k, _] : req.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw Error(ErrorCode::InvalidConfig, "unknown play request key: " + k);
    if (!req.contains("game") || !req.contains("backend"))
      throw Error(ErrorCode::Usage, "play needs a game and a backend");
    const auto game = env::parse_game(req["game"].get<std::string>());
    const auto spec = req["backend"].is_string() ? llm::parse_backend_spec(req["backend"].get<std::string>())
                                                 : llm::backend_spec_from_json(req["backend"]);
    const auto cfg = req.contains("env") ? env::env_config_from_json(req["env"]) : env::EnvConfig{};
    const auto condition = harness::parse_condition(req.value("condition", std::string("both")));
    const auto enriched = perception::parse_mode(req.value("enriched_perception", std::string("structured_text")));
    auto h = harness::config_for(condition, enriched);
    h.template_id = req.value("template", std::string());
    if (req.contains("fallback")) h.fallback = harness::parse_fallback(req["fallback"].get<std::string>());
    h.max_parse_retries = req.value("max_parse_retries", h.max_parse_retries);
    std::uint64_t seed = 0;
    if (req.contains("seed"))
      seed = req["seed"].is_string() ? std::stoull(req["seed"].get<std::string>()) : req["seed"].get<std::uint64_t>();
    const int budget = req.value("turn_budget", 0);
    auto backend = llm::make_backend(spec, runner::backend_seed(seed, spec.name));
    *out_record_json = dup(harness::to_json(harness::run_episode(game, cfg, h, *backend, seed, budget)).dump());
  });
}

gh_status gh_run_eval(const char* config_json, char** out_summary_json) {
  return guarded([&] {
    require(out_summary_json, "out_summary_json");
    const auto s = runner::run_eval(runner::run_config_from_json(parse(config_json, "run config")));
    *out_summary_json = dup(runner::to_json(s).dump());
  });
}

gh_status gh_run_optimize(const char* config_json, char** out_summary_json) {
  return guarded([&] {
    require(out_summary_json, "out_summary_json");
    const auto s = runner::run_optimize(runner::run_config_from_json(parse(config_json, "run config")));
    *out_summary_json = dup(runner::to_json(s).dump());
  });
}

gh_status gh_run_stats(const char* run_dir, char** out_summary_json) {
  return guarded([&] {
    require(run_dir, "run_dir");
    require(out_summary_json, "out_summary_json");
    *out_summary_json = dup(runner::to_json(runner::write_reports(run_dir)).dump());
  });
}

gh_status gh_config_normalize(const char* config_json, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    *out_json = dup(runner::to_json(runner::run_config_from_json(parse(config_json, "run config"))).dump(2));
  });
}

gh_status gh_random_baseline(const char* game, const char* config_json, int runs, uint64_t seed, size_t workers,
                             char** out_json) {
  return guarded([&] {
    require(game, "game");
    require(out_json, "out_json");
    const auto b = stats::random_baseline(env::parse_game(game), env_config(config_json), runs, seed,
                                          workers == 0 ? 1 : workers);
    *out_json = dup(stats::to_json(b).dump());
  });
}

gh_status gh_paired_t_test(const double* with_scores, const double* without_scores, size_t n, double* mean_diff,
                           double* t, double* p) {
  return guarded([&] {
    if (n > 0) {
      require(with_scores, "with_scores");
      require(without_scores, "without_scores");
    }
    std::vector<std::pair<double, double>> pairs;
    for (size_t i = 0; i < n; ++i) pairs.emplace_back(with_scores[i], without_scores[i]);
    const auto r = stats::paired_t_test(pairs);
    if (mean_diff) *mean_diff = r.mean_diff;
    if (t) *t = r.t;
    if (p) *p = r.p;
  });
}

gh_status gh_glass_delta(double model_mean, double baseline_mean, double baseline_std, double* out) {
  return guarded([&] {
    require(out, "out");
    *out = stats::glass_delta(model_mean, stats::BaselineStats{env::Game::g2048, 0, baseline_mean, baseline_std, {}});
  });
}

}  // extern "C"
