#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common/json.hpp"
#include "env/environment.hpp"
#include "harness/harness.hpp"
#include "llm/backend.hpp"
#include "promptopt/promptopt.hpp"
#include "stats/stats.hpp"

namespace gameharness::runner {

inline constexpr std::string_view kRunSchema = "gameharness.run/1";

struct GameSpec {
  env::Game game = env::Game::g2048;
  env::EnvConfig env;
  int turn_budget = 0;
  std::string template_id;  // empty: the game's default
};

struct OptimizeSection {
  std::string base_template;
  std::vector<promptopt::EnvSuite> train;
  std::vector<promptopt::EnvSuite> dev;
  std::vector<llm::BackendSpec> targets;
  std::vector<llm::BackendSpec> optimizers;
  int k = 20;
  int episodes_per_eval = 3;
  int minibatch = 2;
  harness::Condition condition = harness::Condition::both;
};

struct RunConfig {
  std::string name = "run";
  std::vector<GameSpec> games;
  std::vector<llm::BackendSpec> backends;
  std::vector<harness::Condition> conditions{harness::Condition::both};
  perception::Mode enriched = perception::Mode::structured_text;
  int max_parse_retries = 2;
  harness::Fallback fallback = harness::Fallback::random_legal;
  llm::GenParams gen;
  int runs = 3;
  std::uint64_t seed = 0;
  int baseline_runs = 30;  // 0 skips the random baseline
  std::size_t workers = 1;
  std::string output_dir;  // empty: runs/<name>
  bool debug_http = false;  // mirror HTTP bodies under <output_dir>/debug
  std::optional<OptimizeSection> optimize;
};

// Unknown keys, bad values and empty required lists throw Error{InvalidConfig}.
RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& config);
void validate(const RunConfig& config);

// Builds every backend once without playing, so missing credentials and bad
// scripts surface as errors before any episode starts.
void preflight(const std::vector<llm::BackendSpec>& backends);

// Per-episode seeds: derive_seed(derive_seed(seed, fnv1a(game)), run). Every
// model and condition shares the seed of a (game, run) pair.
std::uint64_t episode_seed(std::uint64_t master, env::Game game, int run);
std::uint64_t backend_seed(std::uint64_t episode_seed, const std::string& backend_name);

harness::HarnessConfig harness_for(const RunConfig& config, const GameSpec& game, harness::Condition c);

std::string sha256_hex(std::string_view data);

struct RunSummary {
  std::string dir;
  std::string config_hash;
  std::size_t episodes = 0;
  Json details;
};

Json to_json(const RunSummary& s);

// Plays every (game, backend, condition, run) cell, writes the run directory
// and its reports. Refuses to reuse a directory that already holds a run.
RunSummary run_eval(const RunConfig& config);

// Recomputes reports/ from config.json, episodes/ and baselines/ only.
RunSummary write_reports(const std::string& dir);

// Runs the optimization section; writes traces/, prompts/ and reports/optimize.json.
RunSummary run_optimize(const RunConfig& config);

}  // namespace gameharness::runner
