#include <doctest.h>

#include <cmath>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "stats/stats.hpp"
#include "support/reference_scores.hpp"

using namespace gameharness;
using namespace gameharness::stats;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Usage;
}

double t_density(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  return c * std::pow(1 + x * x / df, -(df + 1) / 2);
}

// Composite Simpson over [0, |t|]; p = 1 - 2 * integral.
double p_by_integration(double t, double df) {
  const double b = std::fabs(t);
  if (b == 0) return 1.0;
  const int n = 20000;
  const double h = b / n;
  double s = t_density(0, df) + t_density(b, df);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * t_density(i * h, df);
  return 1.0 - 2.0 * s * h / 3.0;
}

std::vector<std::pair<double, double>> reference_pairs(int col) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& m : reference::kScores)
    if (m.without) pairs.emplace_back(m.with[col], (*m.without)[col]);
  return pairs;
}

ScoreRecord rec(std::string id, std::string model, std::string cond, double score, std::string key = "k") {
  return {std::move(id), std::move(model), env::Game::g2048, std::move(cond), score, std::move(key)};
}

}  // namespace

TEST_CASE("describe matches a naive two-pass oracle") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(2 + rng.below(40));
    for (auto& x : xs) x = rng.unit() * 1000 - 300;
    long double sum = 0;
    for (double x : xs) sum += x;
    const long double mean = sum / xs.size();
    long double ss = 0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const auto s = describe(xs);
    CHECK(std::fabs(s.mean - static_cast<double>(mean)) < 1e-12 * std::max(1.0, std::fabs(s.mean)));
    CHECK(std::fabs(s.std - std::sqrt(static_cast<double>(ss / (xs.size() - 1)))) < 1e-12 * std::max(1.0, s.std));
  }
  CHECK(describe({}).n == 0);
  CHECK(describe({5}).std == 0);
}

TEST_CASE("incomplete beta identities") {
  CHECK(incomplete_beta(3, 3, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(incomplete_beta(2.5, 1, 0.4) == doctest::Approx(std::pow(0.4, 2.5)).epsilon(1e-12));
  CHECK(incomplete_beta(2, 3, 0) == 0);
  CHECK(incomplete_beta(2, 3, 1) == 1);
  CHECK(incomplete_beta(4, 7, 0.2) + incomplete_beta(7, 4, 0.8) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("t p-values agree with numerical integration") {
  double worst = 0;
  for (int df = 1; df <= 30; ++df)
    for (double t : {0.0, 0.1, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0, 15.0, 20.0, -2.2}) {
      const double p = t_two_sided_p(t, df);
      CHECK(p >= 0);
      CHECK(p <= 1);
      worst = std::max(worst, std::fabs(p - p_by_integration(t, df)));
    }
  CHECK(worst < 1e-6);
}

TEST_CASE("paired t-test on reference 2048 pairs") {
  const auto r = paired_t_test(reference_pairs(reference::k2048));
  CHECK(r.n == 10);
  CHECK(r.df == 9);
  CHECK(std::fabs(r.mean_diff - 17.81) <= 0.01 + 1e-9);
  CHECK(std::fabs(r.t - 2.36) <= 0.01);
  CHECK(std::fabs(r.p - 0.0424) <= 0.002);
}

TEST_CASE("paired t-test edge cases") {
  const auto sym = paired_t_test({{1, 0}, {0, 1}});
  CHECK(sym.t == 0);
  CHECK(sym.p == doctest::Approx(1.0));
  CHECK(code_of([] { paired_t_test({{1, 0}}); }) == ErrorCode::TooFewPairs);
  CHECK(code_of([] { paired_t_test({{2, 1}, {5, 4}, {0, -1}}); }) == ErrorCode::ZeroVarianceDiffs);
  const std::vector<std::pair<double, double>> pairs{{3, 1}, {4, 4}, {9, 2}, {1, 0}};
  std::vector<std::pair<double, double>> swapped;
  for (auto [a, b] : pairs) swapped.emplace_back(b, a);
  const auto a = paired_t_test(pairs), b = paired_t_test(swapped);
  CHECK(a.t == doctest::Approx(-b.t));
  CHECK(a.p == doctest::Approx(b.p));
  CHECK((a.t > 0) == (a.mean_diff > 0));
}

TEST_CASE("glass delta") {
  const BaselineStats b2048{env::Game::g2048, 30, 100.4, 7.8, {}};
  CHECK(glass_delta(108.2, b2048) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(glass_delta(100.4, b2048) == 0.0);
  const BaselineStats candy{env::Game::candy, 30, 116.5, 51.5, {}};
  CHECK(glass_delta(647.0, candy) == doctest::Approx(10.301).epsilon(1e-4));
  CHECK(code_of([] { glass_delta(3, BaselineStats{env::Game::sokoban, 30, 0, 0, {}}); }) ==
        ErrorCode::ZeroVarianceBaseline);
  for (double c : {0.5, 3.0, 100.0}) {
    const BaselineStats scaled{env::Game::candy, 30, candy.mean * c, candy.std * c, {}};
    CHECK(glass_delta(647.0 * c, scaled) == doctest::Approx(glass_delta(647.0, candy)));
  }
}

TEST_CASE("baselines") {
  const auto b = baseline_from_scores(env::Game::tetris, {10, 10});
  CHECK(b.mean == 10);
  CHECK(b.std == 0);
  CHECK(code_of([] { baseline_from_scores(env::Game::tetris, {10}); }) == ErrorCode::InvalidConfig);
  CHECK(code_of([] { random_baseline(env::Game::g2048, {}, 1, 0); }) == ErrorCode::InvalidConfig);
  const auto r = random_baseline(env::Game::candy, {}, 3, 5, 2);
  CHECK(r.runs == 3);
  CHECK(r.seeds.size() == 3);
  CHECK(r.mean > 0);
  const auto again = random_baseline(env::Game::candy, {}, 3, 5, 1);
  CHECK(to_json(again) == to_json(r));
  CHECK(to_json(baseline_from_json(to_json(r))) == to_json(r));
}

TEST_CASE("sign test") {
  CHECK(sign_test_p(10, 0) == doctest::Approx(2.0 / 1024));
  CHECK(sign_test_p(3, 3) == doctest::Approx(1.0));
  CHECK(sign_test_p(0, 0) == 1.0);
  CHECK(sign_test_p(8, 2) == doctest::Approx(2 * 56.0 / 1024));
}

TEST_CASE("ablation grid") {
  std::vector<ScoreRecord> rs;
  int id = 0;
  for (const char* c : kConditionOrder)
    for (int run = 0; run < 3; ++run) rs.push_back(rec(std::to_string(id++), "m", c, run));
  const auto grid = ablation_grid(rs);
  REQUIRE(grid.size() == 1);
  for (const auto& [c, cell] : grid[0].cells) {
    REQUIRE(cell);
    CHECK(cell->sample.n == 3);
    CHECK(cell->sample.mean == 1);
  }
  rs.push_back(rec("0", "m", "zs", 5));
  CHECK(code_of([&] { ablation_grid(rs); }) == ErrorCode::DuplicateRecord);

  const auto partial = ablation_grid({rec("a", "m", "zs", 1), rec("b", "m", "both", 2)});
  CHECK(partial[0].cells.size() == 4);
  CHECK(partial[0].cells.at("zs"));
  CHECK_FALSE(partial[0].cells.at("memory"));
  CHECK_FALSE(partial[0].cells.at("perception"));
}

TEST_CASE("summarize") {
  CHECK(code_of([] { summarize({}, {}); }) == ErrorCode::EmptyInput);
  const BaselineStats base{env::Game::g2048, 30, 100, 10, {}};

  const auto one = summarize({rec("a", "m", "both", 110), rec("b", "m", "both", 130)}, {base});
  CHECK(one.t_tests.empty());
  CHECK_FALSE(one.notes.empty());
  REQUIRE(one.deltas.size() == 1);
  CHECK(one.deltas[0].delta == doctest::Approx(2.0));

  CHECK(code_of([&] { summarize({rec("a", "m", "zs", 1, "x"), rec("b", "m", "zs", 2, "y")}, {base}); }) ==
        ErrorCode::KeyMismatch);
  CHECK(code_of([&] { summarize({rec("a", "m", "zs", 1)}, {base, base}); }) == ErrorCode::KeyMismatch);

  std::vector<ScoreRecord> rs;
  for (int m = 0; m < 3; ++m) {
    rs.push_back(rec(fmt::format("w{}", m), fmt::format("m{}", m), "both", 120 + m * m));
    rs.push_back(rec(fmt::format("n{}", m), fmt::format("m{}", m), "zs", 100 + m));
  }
  const auto rep = summarize(rs, {base});
  REQUIRE(rep.t_tests.size() == 1);
  REQUIRE(rep.t_tests[0].result);
  CHECK(rep.t_tests[0].result->n == 3);
  REQUIRE(rep.delta_summary);
  CHECK(rep.delta_summary->with_wins == 3);
  CHECK(to_csv(rep).rfind("model,game,condition,runs,mean,std,delta,record_ids\n", 0) == 0);
  CHECK(to_csv(rep) == to_csv(summarize(rs, {base})));
  CHECK(to_markdown(rep).find("| m0 | g2048 |") != std::string::npos);
  CHECK(to_json(rep)["delta_summary"]["with_wins"] == 3);

  auto soko = rs;
  for (auto& r : soko) r.game = env::Game::sokoban;
  const auto excluded = summarize(soko, {BaselineStats{env::Game::sokoban, 30, 0, 0, {}}});
  CHECK(excluded.deltas.empty());
  CHECK(excluded.excluded_games == std::vector<env::Game>{env::Game::sokoban});
}

TEST_CASE("delta summary over reference effect sizes") {
  std::vector<DeltaCell> cells;
  double with = 0, without = 0;
  for (const auto& row : reference::kDeltas)
    for (int g = 0; g < 3; ++g) {
      const auto key = fmt::format("{}#{}", row.model, g);
      cells.push_back({key, env::Game::g2048, kWithHarness, row.with[g]});
      cells.push_back({key, env::Game::g2048, kWithoutHarness, row.without[g]});
      with += row.with[g];
      without += row.without[g];
    }
  const auto s = summarize_deltas(cells);
  CHECK(s.with_cells == 30);
  CHECK(s.mean_with == doctest::Approx(with / 30));
  CHECK(s.mean_without == doctest::Approx(without / 30));
  CHECK(s.positive_with == 29);
  CHECK(s.positive_without == 17);
  CHECK(s.pairs == 30);
  CHECK(s.with_wins == 23);
}
