#include "stats/stats.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/text.hpp"
#include "harness/harness.hpp"

namespace gameharness::stats {

Sample describe(const std::vector<double>& xs) {
  Sample s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (a <= 0 || b <= 0) throw Error(ErrorCode::InvalidConfig, "incomplete beta needs a, b > 0");
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double t_two_sided_p(double t, double df) {
  if (df <= 0) throw Error(ErrorCode::InvalidConfig, "degrees of freedom must be > 0");
  if (std::isinf(t)) return 0.0;
  const double p = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  const int k = std::min(wins, losses);
  // P(X <= k) for X ~ Bin(n, 1/2), summed in log space.
  double tail = 0.0;
  for (int i = 0; i <= k; ++i)
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) - n * std::log(2.0));
  return std::min(1.0, 2.0 * tail);
}

TTestResult paired_t_test(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::TooFewPairs, fmt::format("need >= 2 pairs, got {}", pairs.size()));
  std::vector<double> diffs;
  diffs.reserve(pairs.size());
  for (const auto& [with, without] : pairs) diffs.push_back(with - without);
  const auto s = describe(diffs);
  if (std::all_of(diffs.begin(), diffs.end(), [&](double d) { return d == diffs.front(); }))
    throw Error(ErrorCode::ZeroVarianceDiffs, "all paired differences are equal");
  TTestResult r;
  r.n = s.n;
  r.mean_diff = s.mean;
  r.df = static_cast<double>(s.n - 1);
  r.t = s.mean / (s.std / std::sqrt(static_cast<double>(s.n)));
  r.p = t_two_sided_p(r.t, r.df);
  return r;
}

// ---- baselines --------------------------------------------------------------

Json to_json(const BaselineStats& b) {
  Json seeds = Json::array();
  for (auto s : b.seeds) seeds.push_back(std::to_string(s));
  return Json{{"game", env::to_string(b.game)}, {"runs", b.runs}, {"mean", b.mean}, {"std", b.std}, {"seeds", seeds}};
}

BaselineStats baseline_from_json(const Json& j) {
  BaselineStats b;
  try {
    b.game = env::parse_game(j.at("game").get<std::string>());
    b.runs = j.at("runs").get<std::size_t>();
    b.mean = j.at("mean").get<double>();
    b.std = j.at("std").get<double>();
    for (const auto& s : j.value("seeds", Json::array())) b.seeds.push_back(std::stoull(s.get<std::string>()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed baseline: ") + e.what());
  }
  if (b.runs < 2 || b.std < 0) throw Error(ErrorCode::InvalidConfig, "baseline needs runs >= 2 and std >= 0");
  return b;
}

BaselineStats baseline_from_scores(env::Game game, const std::vector<double>& scores,
                                   std::vector<std::uint64_t> seeds) {
  if (scores.size() < 2) throw Error(ErrorCode::InvalidConfig, "a random baseline needs at least two runs");
  const auto s = describe(scores);
  return {game, s.n, s.mean, s.std, std::move(seeds)};
}

BaselineStats random_baseline(env::Game game, const env::EnvConfig& config, int runs, std::uint64_t seed,
                              std::size_t workers) {
  if (runs < 2) throw Error(ErrorCode::InvalidConfig, "a random baseline needs at least two runs");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < runs; ++i) seeds.push_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  const auto hc = harness::config_for(harness::Condition::zs);
  const auto scores = parallel_map(seeds.size(), workers, [&](std::size_t i) {
    llm::RandomLegalBackend backend(derive_seed(seeds[i], 1));
    return harness::run_episode(game, config, hc, backend, seeds[i], 0).final_score.reported;
  });
  return baseline_from_scores(game, scores, std::move(seeds));
}

double glass_delta(double model_mean, const BaselineStats& baseline) {
  if (!(baseline.std > 0))
    throw Error(ErrorCode::ZeroVarianceBaseline,
                fmt::format("random baseline for {} has zero variance", env::to_string(baseline.game)));
  return (model_mean - baseline.mean) / baseline.std;
}

// ---- aggregation ------------------------------------------------------------

namespace {

using CellKey = std::tuple<std::string, int, std::string>;  // model, game, condition
using RowKey = std::pair<std::string, int>;

int condition_rank(const std::string& c) {
  for (int i = 0; i < 4; ++i)
    if (c == kConditionOrder[i]) return i;
  return 4;
}

std::vector<std::string> condition_keys(const std::set<std::string>& seen) {
  std::vector<std::string> keys(std::begin(kConditionOrder), std::end(kConditionOrder));
  for (const auto& c : seen)
    if (condition_rank(c) == 4) keys.push_back(c);
  return keys;
}

}  // namespace

std::vector<GridRow> ablation_grid(const std::vector<ScoreRecord>& records) {
  std::set<std::string> ids, conditions;
  std::map<CellKey, std::vector<const ScoreRecord*>> groups;
  for (const auto& r : records) {
    if (!ids.insert(r.id).second) throw Error(ErrorCode::DuplicateRecord, "duplicate record id: " + r.id);
    conditions.insert(r.condition);
    groups[{r.model, static_cast<int>(r.game), r.condition}].push_back(&r);
  }
  const auto keys = condition_keys(conditions);
  std::map<RowKey, GridRow> rows;
  for (const auto& [key, members] : groups) {
    const auto& [model, game, condition] = key;
    auto& row = rows[{model, game}];
    if (row.cells.empty()) {
      row.model = model;
      row.game = static_cast<env::Game>(game);
      for (const auto& k : keys) row.cells[k] = std::nullopt;
    }
    Cell cell;
    cell.model = model;
    cell.game = row.game;
    cell.condition = condition;
    std::vector<double> scores;
    for (const auto* r : members) {
      if (r->config_key != members.front()->config_key)
        throw Error(ErrorCode::KeyMismatch,
                    fmt::format("cell {}/{}/{} mixes configurations", model, env::to_string(row.game), condition));
      scores.push_back(r->score);
      cell.record_ids.push_back(r->id);
    }
    std::sort(cell.record_ids.begin(), cell.record_ids.end());
    cell.sample = describe(scores);
    row.cells[condition] = std::move(cell);
  }
  std::vector<GridRow> out;
  for (auto& [_, row] : rows) out.push_back(std::move(row));
  std::stable_sort(out.begin(), out.end(), [](const GridRow& a, const GridRow& b) {
    return std::tie(a.game, a.model) < std::tie(b.game, b.model);
  });
  return out;
}

DeltaSummary summarize_deltas(const std::vector<DeltaCell>& cells) {
  DeltaSummary s;
  std::map<RowKey, std::pair<std::optional<double>, std::optional<double>>> paired;
  double sum_with = 0.0, sum_without = 0.0;
  for (const auto& c : cells) {
    if (c.condition == kWithHarness) {
      ++s.with_cells;
      sum_with += c.delta;
      s.positive_with += c.delta > 0;
      paired[{c.model, static_cast<int>(c.game)}].first = c.delta;
    } else if (c.condition == kWithoutHarness) {
      ++s.without_cells;
      sum_without += c.delta;
      s.positive_without += c.delta > 0;
      paired[{c.model, static_cast<int>(c.game)}].second = c.delta;
    }
  }
  if (s.with_cells) s.mean_with = sum_with / static_cast<double>(s.with_cells);
  if (s.without_cells) s.mean_without = sum_without / static_cast<double>(s.without_cells);
  s.delta_star = s.mean_with - s.mean_without;
  for (const auto& [_, p] : paired) {
    if (!p.first || !p.second) continue;
    ++s.pairs;
    s.with_wins += *p.first > *p.second;
  }
  return s;
}

EvalReport summarize(const std::vector<ScoreRecord>& records, const std::vector<BaselineStats>& baselines) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no episode records to summarize");
  std::map<env::Game, const BaselineStats*> by_game;
  for (const auto& b : baselines)
    if (!by_game.emplace(b.game, &b).second)
      throw Error(ErrorCode::KeyMismatch, "two baselines for " + std::string(env::to_string(b.game)));

  EvalReport report;
  report.grid = ablation_grid(records);

  std::set<env::Game> games;
  for (const auto& row : report.grid) games.insert(row.game);
  for (auto g : games) {
    const auto it = by_game.find(g);
    if (it == by_game.end() || !(it->second->std > 0)) {
      report.excluded_games.push_back(g);
      report.notes.push_back(fmt::format("{}: {}; no effect sizes", env::to_string(g),
                                         it == by_game.end() ? "no random baseline" : "random baseline has zero variance"));
    }
  }
  for (auto& row : report.grid) {
    const auto it = by_game.find(row.game);
    if (it == by_game.end() || !(it->second->std > 0)) continue;
    for (auto& [condition, cell] : row.cells) {
      if (!cell) continue;
      cell->delta = glass_delta(cell->sample.mean, *it->second);
      report.deltas.push_back({row.model, row.game, condition, *cell->delta});
    }
  }
  if (!report.deltas.empty()) report.delta_summary = summarize_deltas(report.deltas);

  std::set<std::string> conditions;
  for (const auto& r : records) conditions.insert(r.condition);
  if (!conditions.count(kWithHarness) || !conditions.count(kWithoutHarness)) {
    report.notes.push_back("paired t-tests need both the zs and both conditions; skipped");
    return report;
  }
  for (auto g : games) {
    GameTTest tt;
    tt.game = g;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& row : report.grid) {
      if (row.game != g) continue;
      const auto& with = row.cells.at(kWithHarness);
      const auto& without = row.cells.at(kWithoutHarness);
      if (with && without) pairs.emplace_back(with->sample.mean, without->sample.mean);
    }
    try {
      tt.result = paired_t_test(pairs);
    } catch (const Error& e) {
      tt.note = e.what();
    }
    report.t_tests.push_back(std::move(tt));
  }
  return report;
}

// ---- emitters ---------------------------------------------------------------

namespace {

std::string fixed(double v) { return fmt::format("{:.3f}", v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
}

}  // namespace

std::string to_csv(const EvalReport& report) {
  std::string out = "model,game,condition,runs,mean,std,delta,record_ids\n";
  for (const auto& row : report.grid) {
    for (const auto& [condition, cell] : row.cells) {
      if (!cell) continue;
      out += fmt::format("{},{},{},{},{},{},{},{}\n", csv_field(row.model), env::to_string(row.game),
                         csv_field(condition), cell->sample.n, fixed(cell->sample.mean), fixed(cell->sample.std),
                         cell->delta ? fixed(*cell->delta) : "", csv_field(text::join(cell->record_ids, ";")));
    }
  }
  return out;
}

Json to_json(const EvalReport& report) {
  Json grid = Json::array();
  for (const auto& row : report.grid) {
    Json cells = Json::object();
    for (const auto& [condition, cell] : row.cells) {
      if (!cell) {
        cells[condition] = nullptr;
        continue;
      }
      cells[condition] = Json{{"runs", cell->sample.n},
                              {"mean", cell->sample.mean},
                              {"std", cell->sample.std},
                              {"delta", cell->delta ? Json(*cell->delta) : Json(nullptr)},
                              {"record_ids", cell->record_ids}};
    }
    grid.push_back({{"model", row.model}, {"game", env::to_string(row.game)}, {"cells", cells}});
  }
  Json tests = Json::array();
  for (const auto& t : report.t_tests) {
    Json j{{"game", env::to_string(t.game)}};
    if (t.result)
      j.update({{"n", t.result->n}, {"mean_diff", t.result->mean_diff}, {"t", t.result->t}, {"df", t.result->df},
                {"p", t.result->p}});
    else
      j["note"] = t.note;
    tests.push_back(std::move(j));
  }
  Json excluded = Json::array();
  for (auto g : report.excluded_games) excluded.push_back(env::to_string(g));
  Json summary = nullptr;
  if (const auto& s = report.delta_summary) {
    summary = Json{{"mean_delta_with", s->mean_with},     {"mean_delta_without", s->mean_without},
                   {"delta_star", s->delta_star},         {"with_cells", s->with_cells},
                   {"without_cells", s->without_cells},   {"positive_with", s->positive_with},
                   {"positive_without", s->positive_without}, {"pairs", s->pairs},
                   {"with_wins", s->with_wins}};
  }
  return Json{{"schema", "gameharness.report/1"}, {"grid", grid},    {"excluded_games", excluded},
              {"delta_summary", summary},         {"t_tests", tests}, {"notes", report.notes}};
}

std::string to_markdown(const EvalReport& report) {
  std::set<std::string> seen;
  for (const auto& row : report.grid)
    for (const auto& [c, _] : row.cells) seen.insert(c);
  std::vector<std::string> conditions(seen.begin(), seen.end());
  std::sort(conditions.begin(), conditions.end(), [](const std::string& a, const std::string& b) {
    return std::make_pair(condition_rank(a), a) < std::make_pair(condition_rank(b), b);
  });

  std::string out = "## Scores\n\n| Model | Game |";
  for (const auto& c : conditions) out += " " + c + " |";
  out += "\n|---|---|";
  for (std::size_t i = 0; i < conditions.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& row : report.grid) {
    out += fmt::format("| {} | {} |", row.model, env::to_string(row.game));
    for (const auto& c : conditions) {
      const auto it = row.cells.find(c);
      if (it == row.cells.end() || !it->second)
        out += " n/a |";
      else
        out += fmt::format(" {} ± {} (n={}) |", fixed(it->second->sample.mean), fixed(it->second->sample.std),
                           it->second->sample.n);
    }
    out += "\n";
  }
  if (!report.deltas.empty()) {
    out += "\n## Glass's delta\n\n| Model | Game | Condition | delta |\n|---|---|---|---|\n";
    for (const auto& d : report.deltas)
      out += fmt::format("| {} | {} | {} | {} |\n", d.model, env::to_string(d.game), d.condition, fixed(d.delta));
  }
  if (const auto& s = report.delta_summary) {
    out += fmt::format(
        "\nmean delta with harness: {} ({} cells, {} positive)\nmean delta without harness: {} ({} cells, {} "
        "positive)\ndelta*: {}\nharness wins: {} of {} pairs\n",
        fixed(s->mean_with), s->with_cells, s->positive_with, fixed(s->mean_without), s->without_cells,
        s->positive_without, fixed(s->delta_star), s->with_wins, s->pairs);
  }
  if (!report.t_tests.empty()) {
    out += "\n## Paired t-tests (both vs zs)\n\n| Game | n | mean diff | t | p |\n|---|---|---|---|---|\n";
    for (const auto& t : report.t_tests) {
      if (t.result)
        out += fmt::format("| {} | {} | {} | {} | {:.4f} |\n", env::to_string(t.game), t.result->n,
                           fixed(t.result->mean_diff), fixed(t.result->t), t.result->p);
      else
        out += fmt::format("| {} | - | - | - | {} |\n", env::to_string(t.game), t.note);
    }
  }
  if (!report.notes.empty()) {
    out += "\n## Notes\n\n";
    for (const auto& n : report.notes) out += "- " + n + "\n";
  }
  return out;
}

}  // namespace gameharness::stats
