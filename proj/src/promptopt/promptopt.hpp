#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "common/json.hpp"
#include "env/environment.hpp"
#include "harness/harness.hpp"
#include "harness/template.hpp"
#include "llm/backend.hpp"

namespace gameharness::promptopt {

// One environment of a suite: the episode seeds are cycled when more
// episodes are requested than seeds listed.
struct EnvSuite {
  env::Game game = env::Game::g2048;
  env::EnvConfig config;
  std::vector<std::uint64_t> seeds;
  int turn_budget = 0;
};

Json to_json(const EnvSuite& suite);
EnvSuite env_suite_from_json(const Json& j);

// Named source of fresh backends, one per episode (or per optimizer branch).
struct Model {
  std::string name;
  std::function<std::unique_ptr<llm::Backend>(std::uint64_t seed)> make;
};

Model model_from_spec(const llm::BackendSpec& spec);

struct OptimizationConfig {
  std::vector<EnvSuite> train;
  std::vector<EnvSuite> dev;
  std::vector<Model> targets;
  std::vector<Model> optimizers;
  int k = 20;
  int episodes_per_eval = 3;
  int minibatch = 2;
  harness::HarnessConfig harness = harness::config_for(harness::Condition::both);
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

// Throws Error{InvalidConfig}: k < 1, empty suites or model lists, a suite
// without seeds, counts < 1, a suite for another game than `game`, or a seed
// shared by train and dev.
void validate(const OptimizationConfig& config, env::Game game);

// ---- evaluation -------------------------------------------------------------

struct EpisodeOutcome {
  std::string model;
  env::Game game = env::Game::g2048;
  std::uint64_t seed = 0;
  double score = 0.0;
  std::string excerpt;
};

struct EvalResult {
  double mean = 0.0;                       // mean over models of per-model means
  std::map<std::string, double> by_model;
  std::vector<EpisodeOutcome> episodes;    // suite-major, then model, then episode
};

// Seed of episode `j` in `suite`.
std::uint64_t episode_seed(const EnvSuite& suite, int j);

// Runs `episodes` episodes per (env, model). Any failing episode aborts the
// whole evaluation. Throws Error{InvalidConfig} for an empty suite or model list.
EvalResult evaluate_template(const harness::PromptTemplate& tmpl, const std::vector<EnvSuite>& suite,
                             const std::vector<Model>& models, int episodes, const harness::HarnessConfig& harness,
                             std::size_t workers = 1);

// ---- mutation ---------------------------------------------------------------

struct Feedback {
  double train_score = 0.0;
  std::vector<std::string> excerpts;  // lowest-scoring episodes first
};

// Picks the `count` lowest-scoring episodes (ties by position).
Feedback make_feedback(const EvalResult& result, std::size_t count = 2);

llm::PromptMessages build_rewrite_request(const harness::PromptTemplate& tmpl, const Feedback& feedback);

// Asks `optimizer` for a rewrite. The reply must carry <system_prompt> and
// <user_prompt> blocks and keep both slots; otherwise Error{MalformedCandidate}.
harness::PromptTemplate propose_mutation(const harness::PromptTemplate& tmpl, const Feedback& feedback,
                                         llm::Backend& optimizer, const std::string& optimizer_name, int step,
                                         const llm::GenParams& params = {});

// ---- search -----------------------------------------------------------------

struct StepEntry {
  std::string optimizer;
  int step = 0;
  std::string candidate_id;  // empty for a rejected (malformed) proposal
  std::optional<double> train_score;
  bool accepted = false;
  double best_train = 0.0;   // after this step
  std::string note;
};

struct BranchResult {
  std::string optimizer;
  harness::PromptTemplate best;
  double base_train = 0.0;
  double best_train = 0.0;
  double dev_mean = 0.0;  // s_avg for this branch
  std::map<std::string, double> dev_by_model;
};

struct OptimizationTrace {
  std::vector<StepEntry> steps;
  std::vector<BranchResult> branches;
  std::string winner;  // optimizer whose branch won
  double s_best = 0.0;
};

struct OptimizationResult {
  harness::PromptTemplate best;
  OptimizationTrace trace;
};

OptimizationResult optimize(const OptimizationConfig& config, const harness::PromptTemplate& base);

Json to_json(const StepEntry& e);
Json to_json(const BranchResult& b);
// One JSON object per line: steps, then branches, then the winner.
std::string to_jsonl(const OptimizationTrace& trace);

// ---- prompt discrepancy -----------------------------------------------------

// |mean(p1) - mean(p2)|; Error{EmptyInput} when either side is empty.
double abs_delta(const std::vector<double>& p1, const std::vector<double>& p2);

struct Discrepancy {
  std::string model;
  double delta_empirical = 0.0;
  double delta_optimized = 0.0;
  std::optional<double> reduction_pct;  // nullopt when delta_empirical == 0
};

Discrepancy prompt_discrepancy(const std::string& model, const std::vector<double>& empirical_1,
                               const std::vector<double>& empirical_2, const std::vector<double>& optimized_1,
                               const std::vector<double>& optimized_2);

Json to_json(const Discrepancy& d);
std::string to_markdown(const std::vector<Discrepancy>& rows);

}  // namespace gameharness::promptopt
