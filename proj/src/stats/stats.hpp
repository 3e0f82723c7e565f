#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "common/json.hpp"
#include "env/environment.hpp"

namespace gameharness::stats {

// ---- descriptive ------------------------------------------------------------

struct Sample {
  std::size_t n = 0;
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) deviation; 0 when n < 2
};

Sample describe(const std::vector<double>& xs);

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of Student's t with `df` degrees of freedom.
double t_two_sided_p(double t, double df);

// Two-sided exact binomial sign test; ties must already be dropped.
double sign_test_p(int wins, int losses);

// ---- paired t-test ----------------------------------------------------------

struct TTestResult {
  std::size_t n = 0;
  double mean_diff = 0.0;
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Pairs are (with, without). Throws Error{TooFewPairs} for n < 2 and
// Error{ZeroVarianceDiffs} when every difference is equal.
TTestResult paired_t_test(const std::vector<std::pair<double, double>>& pairs);

// ---- random baseline and effect sizes ---------------------------------------

struct BaselineStats {
  env::Game game = env::Game::g2048;
  std::size_t runs = 0;
  double mean = 0.0;
  double std = 0.0;
  std::vector<std::uint64_t> seeds;
};

Json to_json(const BaselineStats& b);
BaselineStats baseline_from_json(const Json& j);

// Throws Error{InvalidConfig} unless there are at least two scores.
BaselineStats baseline_from_scores(env::Game game, const std::vector<double>& scores,
                                   std::vector<std::uint64_t> seeds = {});

// Per-run seeds are derive_seed(seed, i). Runs go through the full harness
// with the random_legal backend and the zero-shot configuration.
BaselineStats random_baseline(env::Game game, const env::EnvConfig& config, int runs, std::uint64_t seed,
                              std::size_t workers = 1);

// (model_mean - baseline.mean) / baseline.std; Error{ZeroVarianceBaseline}
// when baseline.std == 0.
double glass_delta(double model_mean, const BaselineStats& baseline);

// ---- aggregation ------------------------------------------------------------

// Condition labels follow the harness ("zs", "memory", "perception", "both").
inline constexpr const char* kConditionOrder[] = {"zs", "memory", "perception", "both"};
inline constexpr const char* kWithHarness = "both";
inline constexpr const char* kWithoutHarness = "zs";

struct ScoreRecord {
  std::string id;
  std::string model;
  env::Game game = env::Game::g2048;
  std::string condition;
  double score = 0.0;
  std::string config_key;  // records in one cell must agree on it
};

struct Cell {
  std::string model;
  env::Game game = env::Game::g2048;
  std::string condition;
  Sample sample;
  std::vector<std::string> record_ids;
  std::optional<double> delta;
};

struct GridRow {
  std::string model;
  env::Game game = env::Game::g2048;
  std::map<std::string, std::optional<Cell>> cells;  // every condition key present; nullopt = missing
};

// Throws Error{DuplicateRecord} when two records share an id.
std::vector<GridRow> ablation_grid(const std::vector<ScoreRecord>& records);

struct DeltaCell {
  std::string model;
  env::Game game = env::Game::g2048;
  std::string condition;
  double delta = 0.0;
};

struct DeltaSummary {
  std::size_t with_cells = 0;
  std::size_t without_cells = 0;
  double mean_with = 0.0;
  double mean_without = 0.0;
  double delta_star = 0.0;
  int positive_with = 0;
  int positive_without = 0;
  int pairs = 0;
  int with_wins = 0;  // pairs where the harnessed delta is larger
};

DeltaSummary summarize_deltas(const std::vector<DeltaCell>& cells);

struct GameTTest {
  env::Game game = env::Game::g2048;
  std::optional<TTestResult> result;
  std::string note;  // why no result was computed
};

struct EvalReport {
  std::vector<GridRow> grid;
  std::vector<DeltaCell> deltas;
  std::vector<env::Game> excluded_games;  // zero-variance or missing baselines
  std::optional<DeltaSummary> delta_summary;
  std::vector<GameTTest> t_tests;
  std::vector<std::string> notes;
};

// Throws Error{EmptyInput} for no records and Error{KeyMismatch} when a cell
// mixes configurations or a baseline is given twice for one game.
EvalReport summarize(const std::vector<ScoreRecord>& records, const std::vector<BaselineStats>& baselines);

// Fixed column order: model, game, condition, runs, mean, std, delta, record_ids.
std::string to_csv(const EvalReport& report);
Json to_json(const EvalReport& report);
std::string to_markdown(const EvalReport& report);

}  // namespace gameharness::stats
