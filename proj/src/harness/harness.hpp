#pragma once

#include <optional>
#include <string>
#include <vector>

#include "common/json.hpp"
#include "common/rng.hpp"
#include "env/environment.hpp"
#include "harness/template.hpp"
#include "llm/backend.hpp"
#include "memory/memory.hpp"
#include "perception/perception.hpp"

namespace gameharness::harness {

// Ablation cells: ZS (raw text, no memory), +Memory, +Perception, +Both.
enum class Condition { zs, memory, perception, both };

inline constexpr Condition kAllConditions[] = {Condition::zs, Condition::memory, Condition::perception,
                                               Condition::both};

std::string_view to_string(Condition c);        // "zs", "memory", ...
std::string_view display_name(Condition c);     // "ZS", "+Memory", ...
Condition parse_condition(std::string_view name);  // accepts either form

enum class Fallback { random_legal, forfeit };

std::string_view to_string(Fallback f);
Fallback parse_fallback(std::string_view name);

struct HarnessConfig {
  perception::Mode perception = perception::Mode::raw_text;
  bool memory_enabled = false;
  int memory_capacity = memory::kDefaultCapacity;
  std::string template_id;  // empty: the game's default template
  int max_parse_retries = 2;
  Fallback fallback = Fallback::random_legal;
  llm::GenParams gen;
};

// `enriched` is the perception mode used by +Perception and +Both; it must
// carry text (structured_text or combined).
HarnessConfig config_for(Condition c, perception::Mode enriched = perception::Mode::structured_text);
std::optional<Condition> condition_of(const HarnessConfig& config);

Json to_json(const HarnessConfig& config);
HarnessConfig harness_config_from_json(const Json& j);

// Resolves template_id (or the game's default) and validates its slots.
PromptTemplate resolve_template(const HarnessConfig& config, env::Game game);

// ---- prompts ----------------------------------------------------------------

inline constexpr std::string_view kNoHistory = "None.";

// Text substituted for the history slot: the serialized trajectory followed
// by the latest reflection, or "None." when both are absent or memory is off.
std::string history_text(const memory::Trajectory& trajectory, const std::optional<memory::Reflection>& reflection,
                         bool memory_enabled);

llm::PromptMessages build_action_prompt(const PromptTemplate& tmpl, const perception::Observation& observation,
                                        const memory::Trajectory& trajectory,
                                        const std::optional<memory::Reflection>& reflection,
                                        const HarnessConfig& config);

struct ParsedResponse {
  std::string thought;
  env::Action action;
};

// Throws Error{NoMoveLine} or Error{InvalidAction}.
ParsedResponse parse_action_response(std::string_view text, env::Game game);

// Human-readable move grammar for `game`, quoted in corrective messages.
std::string_view move_format(env::Game game);

// ---- episodes ---------------------------------------------------------------

inline constexpr std::string_view kEpisodeSchema = "gameharness.episode/1";

struct TurnRecord {
  int turn = 0;
  std::string observation_hash;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  std::vector<std::string> responses;  // raw replies, first attempt first
  std::string thought;
  std::string action;
  bool fallback = false;
  std::optional<std::string> reflection;
  double reward = 0.0;
  double score_after = 0.0;
  double latency_ms = 0.0;
  env::ScoreCounters counters;  // cumulative, after the step
};

struct EpisodeRecord {
  std::string id;
  env::Game game = env::Game::g2048;
  std::string model;
  std::optional<Condition> condition;
  HarnessConfig harness;
  env::EnvConfig env;
  std::string template_id;
  std::uint64_t seed = 0;
  int turn_budget = 0;
  std::vector<TurnRecord> turns;
  env::Score final_score;
  std::string termination;  // a TerminationReason, "turn_budget" or "forfeit"
};

Json to_json(const EpisodeRecord& record);
EpisodeRecord episode_from_json(const Json& j);
std::string to_jsonl(const EpisodeRecord& record);

struct Decision {
  env::Action action;
  TurnRecord log;
};

struct AgentContext {
  const env::Environment& environment;
  const HarnessConfig& config;
  const PromptTemplate& tmpl;
  llm::Backend& backend;
  llm::Backend* reflection_backend = nullptr;  // defaults to `backend`
  memory::MemoryBuffer* buffer = nullptr;      // required when memory is enabled
  Rng* rng = nullptr;                          // episode RNG for the random fallback
};

// One turn: observe, optionally reflect, prompt, parse, retry, fall back.
// Throws Error{Forfeit} when retries are exhausted under Fallback::forfeit.
Decision decide(const env::GameState& state, AgentContext& ctx);

// Plays until the environment terminates, the agent forfeits or
// `turn_budget` turns have been played (0: no harness-side limit).
EpisodeRecord run_episode(env::Game game, const env::EnvConfig& env_config, const HarnessConfig& config,
                          llm::Backend& backend, std::uint64_t seed, int turn_budget,
                          const std::string& record_id = "");
// Same, with an explicit template instead of config.template_id.
EpisodeRecord run_episode(env::Game game, const env::EnvConfig& env_config, const HarnessConfig& config,
                          const PromptTemplate& tmpl, llm::Backend& backend, std::uint64_t seed, int turn_budget,
                          const std::string& record_id = "");

}  // namespace gameharness::harness
