#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "common/error.hpp"
#include "env/environment.hpp"
#include "env/serialization.hpp"

using namespace gameharness;
using namespace gameharness::env;

namespace {

// Cell-by-cell simulation of a left slide: each tile travels one step at a
// time and may merge once with a tile that has not merged this turn.
LineMerge brute_force_left(std::array<int, 4> line) {
  std::array<bool, 4> merged{};
  int gain = 0;
  for (int i = 1; i < 4; ++i) {
    if (line[i] == 0) continue;
    int pos = i;
    while (pos > 0 && line[pos - 1] == 0) {
      line[pos - 1] = line[pos];
      line[pos] = 0;
      --pos;
    }
    if (pos > 0 && line[pos - 1] == line[pos] && !merged[pos - 1]) {
      line[pos - 1] *= 2;
      gain += line[pos - 1];
      line[pos] = 0;
      merged[pos - 1] = true;
    }
  }
  return {line, gain};
}

Grid grid_from(std::initializer_list<std::initializer_list<int>> rows) {
  Grid g(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (int v : row) g.at(r, c++) = v;
    ++r;
  }
  return g;
}

GameState g2048_state(Grid board, std::uint64_t seed = 1) {
  GameState s;
  s.game = Game::g2048;
  s.board = std::move(board);
  s.rng = Rng(seed);
  return s;
}

long board_sum(const Grid& g) { return std::accumulate(g.cells.begin(), g.cells.end(), 0L); }

int count_nonzero(const Grid& g) {
  return static_cast<int>(std::count_if(g.cells.begin(), g.cells.end(), [](int v) { return v != 0; }));
}

GameState sokoban_state(const char* xsb) {
  EnvConfig cfg;
  cfg.levels = parse_xsb(xsb);
  return Environment(Game::sokoban, cfg).reset(0);
}

}  // namespace

TEST_CASE("slide_merge_line examples") {
  CHECK(slide_merge_line({2, 2, 4, 0}, true) == LineMerge{{4, 4, 0, 0}, 4});
  CHECK(slide_merge_line({2, 2, 2, 2}, true) == LineMerge{{4, 4, 0, 0}, 8});
  CHECK(slide_merge_line({0, 0, 0, 0}, true) == LineMerge{{0, 0, 0, 0}, 0});
  CHECK(slide_merge_line({2, 2, 2, 0}, false) == LineMerge{{0, 0, 2, 4}, 4});
  CHECK(slide_merge_line({4, 0, 4, 8}, true) == LineMerge{{8, 8, 0, 0}, 8});
}

TEST_CASE("slide_merge_line matches the brute-force oracle on every line") {
  const int values[] = {0, 2, 4, 8, 16, 32, 64};
  int checked = 0;
  for (int a : values)
    for (int b : values)
      for (int c : values)
        for (int d : values) {
          const std::array<int, 4> line{a, b, c, d};
          REQUIRE(slide_merge_line(line, true) == brute_force_left(line));
          std::array<int, 4> rev{d, c, b, a};
          LineMerge expected = brute_force_left(rev);
          std::reverse(expected.line.begin(), expected.line.end());
          REQUIRE(slide_merge_line(line, false) == expected);
          ++checked;
        }
  CHECK(checked == 2401);
}

TEST_CASE("2048 reset spawns two tiles") {
  const auto s = reset(Game::g2048, {}, 7);
  CHECK(s.board.rows == 4);
  CHECK(s.board.cols == 4);
  CHECK(count_nonzero(s.board) == 2);
  for (int v : s.board.cells) CHECK((v == 0 || v == 2 || v == 4));
  CHECK(s == reset(Game::g2048, {}, 7));
}

TEST_CASE("2048 legal actions for a single corner tile") {
  Environment env(Game::g2048, {});
  Grid g(4, 4);
  g.at(0, 0) = 2;
  const auto legal = env.legal_actions(g2048_state(g));
  REQUIRE(legal.size() == 2);
  CHECK(legal[0] == Action::direction(Game::g2048, Direction::down));
  CHECK(legal[1] == Action::direction(Game::g2048, Direction::right));
}

TEST_CASE("2048 step merges, rewards and spawns") {
  Environment env(Game::g2048, {});
  Grid g(4, 4);
  g.at(0, 0) = 2;
  g.at(0, 1) = 2;
  g.at(0, 2) = 4;
  const auto r = env.step(g2048_state(g), Action::direction(Game::g2048, Direction::left));
  CHECK(r.reward == 4);
  CHECK(r.next_state.board.at(0, 0) == 4);
  CHECK(r.next_state.board.at(0, 1) == 4);
  CHECK(count_nonzero(r.next_state.board) == 3);
  CHECK(r.next_state.counters.merged_sum == 4);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("2048 stagnation after ten unchanged moves") {
  Environment env(Game::g2048, {});
  Grid g(4, 4);
  g.at(0, 0) = 2;
  auto s = g2048_state(g);
  for (int i = 0; i < 9; ++i) {
    const auto r = env.step(s, Action::direction(Game::g2048, Direction::up));
    REQUIRE_FALSE(r.terminated);
    s = r.next_state;
  }
  CHECK(s.stagnation == 9);
  const auto r = env.step(s, Action::direction(Game::g2048, Direction::left));
  CHECK(r.reason == TerminationReason::stagnation);
}

TEST_CASE("2048 game over on a locked board") {
  Environment env(Game::g2048, {});
  Grid g = grid_from({{2, 4, 2, 4}, {4, 2, 4, 2}, {16, 4, 2, 4}, {8, 16, 8, 0}});
  const auto r = env.step(g2048_state(g), Action::direction(Game::g2048, Direction::right));
  CHECK(count_nonzero(r.next_state.board) == 16);
  CHECK(r.reason == TerminationReason::game_over);
  CHECK(board_sum(r.next_state.board) - board_sum(g) == r.next_state.board.at(3, 0));
}

TEST_CASE("reported scores") {
  GameState s;
  s.game = Game::g2048;
  s.counters.merged_sum = 1024;
  CHECK(reported_score(s).reported == doctest::Approx(100.0));
  s.counters.merged_sum = 0;
  CHECK(reported_score(s).reported == 0.0);
  s.game = Game::tetris;
  s.counters.pieces_dropped = 30;
  s.counters.lines_cleared = 5;
  CHECK(reported_score(s).reported == 35.0);
  s.game = Game::candy;
  s.counters.candies_eliminated = 647;
  CHECK(reported_score(s).reported == 647.0);
}

TEST_CASE("unknown game and invalid config") {
  CHECK_THROWS_AS(parse_game("chess"), Error);
  try {
    parse_game("chess");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownGame);
  }
  EnvConfig bad;
  bad.move_budget = -1;
  CHECK_THROWS_AS(Environment(Game::tetris, bad), Error);
  CHECK_THROWS_AS(parse_xsb("####\n#@ #\n####\n").at(0), Error);  // no boxes
}

TEST_CASE("xsb parsing") {
  const auto levels = parse_xsb("; first\n#####\n#@$.#\n#####\n\n;second\n######\n#@ $.#\n######\n");
  REQUIRE(levels.size() == 2);
  CHECK(levels[0].id == "first");
  CHECK(levels[1].id == "second");
  CHECK(levels[0].grid.at(1, 1) == static_cast<int>(SokobanCell::player));
  CHECK(levels[0].grid.at(1, 2) == static_cast<int>(SokobanCell::box));
  CHECK(levels[0].grid.at(1, 3) == static_cast<int>(SokobanCell::target));
  CHECK(to_xsb(levels[0].grid) == "#####\n#@$.#\n#####\n");
  CHECK_THROWS_AS(parse_xsb("#####\n#@$.\n#####\n"), Error);      // open boundary
  CHECK_THROWS_AS(parse_xsb("#####\n#@$$.#\n######\n"), Error);    // 2 boxes, 1 target
  CHECK_THROWS_AS(parse_xsb("#####\n#@$x#\n#####\n"), Error);      // bad glyph
  CHECK_THROWS_AS(load_level_pack("/nonexistent/pack.xsb"), Error);
}

TEST_CASE("bundled level packs load") {
  CHECK(load_level_pack("default").size() == 3);
  CHECK(load_level_pack("tiny").size() == 4);
}

TEST_CASE("sokoban reset places player and boxes at file positions") {
  const auto s = sokoban_state("#######\n#@ $ .#\n#######\n");
  CHECK(s.board.at(1, 1) == static_cast<int>(SokobanCell::player));
  CHECK(s.board.at(1, 3) == static_cast<int>(SokobanCell::box));
  CHECK(s.board.at(1, 5) == static_cast<int>(SokobanCell::target));
}

TEST_CASE("sokoban push onto the last target wins") {
  EnvConfig cfg;
  cfg.levels = parse_xsb("#####\n#@$.#\n#####\n");
  Environment env(Game::sokoban, cfg);
  const auto r = env.step(env.reset(0), Action::direction(Game::sokoban, Direction::right));
  CHECK(r.reward == 1);
  CHECK(r.reason == TerminationReason::won);
  CHECK(reported_score(r.next_state).reported == 1.0);
}

TEST_CASE("sokoban advances to the next level") {
  EnvConfig cfg;
  cfg.levels = parse_xsb("#####\n#@$.#\n#####\n\n######\n#@ $.#\n######\n");
  Environment env(Game::sokoban, cfg);
  auto r = env.step(env.reset(0), Action::direction(Game::sokoban, Direction::right));
  CHECK_FALSE(r.terminated);
  CHECK(r.next_state.level_index == 1);
  CHECK(r.next_state.moves_used == 0);
  r = env.step(r.next_state, Action::direction(Game::sokoban, Direction::right));
  r = env.step(r.next_state, Action::direction(Game::sokoban, Direction::right));
  CHECK(r.reason == TerminationReason::won);
  CHECK(r.next_state.counters.boxes_on_targets == 2);
}

TEST_CASE("sokoban walled-in player has no legal moves") {
  GameState s;
  s.game = Game::sokoban;
  s.board = grid_from({{1, 1, 1}, {1, 5, 1}, {1, 1, 1}});
  CHECK(Environment(Game::sokoban, EnvConfig{"tiny"}).legal_actions(s).empty());
}

TEST_CASE("sokoban blocked push is a no-op that spends a step") {
  EnvConfig cfg;
  cfg.levels = parse_xsb("######\n#@$$.#\n#   .#\n######\n");
  Environment env(Game::sokoban, cfg);
  const auto s = env.reset(0);
  const auto legal = env.legal_actions(s);
  CHECK(std::find(legal.begin(), legal.end(), Action::direction(Game::sokoban, Direction::right)) ==
        legal.end());
  const auto r = env.step(s, Action::direction(Game::sokoban, Direction::right));
  CHECK(r.next_state.board == s.board);
  CHECK(r.next_state.moves_used == 1);
}

TEST_CASE("detect_deadlock corner rule") {
  auto s = sokoban_state("#####\n#$ .#\n# @ #\n#####\n");
  CHECK(detect_deadlock(s));
  s = sokoban_state("#####\n#* .#\n#$@ #\n#####\n");
  // (1,1) box on target in the corner is exempt; (2,1) is cornered.
  CHECK(detect_deadlock(s));
  s = sokoban_state("#####\n#*  #\n# @ #\n#####\n");
  CHECK_FALSE(detect_deadlock(s));
  s = sokoban_state("#######\n#     #\n#  $ .#\n#  @  #\n#######\n");
  CHECK_FALSE(detect_deadlock(s));
  GameState other;
  other.game = Game::tetris;
  CHECK_THROWS_AS(detect_deadlock(other), Error);
}

TEST_CASE("sokoban deadlock terminates the episode") {
  EnvConfig cfg;
  cfg.levels = parse_xsb("######\n#    #\n# $@.#\n######\n");
  Environment env(Game::sokoban, cfg);
  const auto r = env.step(env.reset(0), Action::direction(Game::sokoban, Direction::left));
  CHECK(r.reason == TerminationReason::deadlock);
}

TEST_CASE("sokoban move budget") {
  EnvConfig cfg;
  cfg.levels = parse_xsb("#######\n#     #\n# @ $.#\n#     #\n#######\n");
  cfg.move_budget = 3;
  Environment env(Game::sokoban, cfg);
  auto s = env.reset(0);
  for (int i = 0; i < 2; ++i) s = env.step(s, Action::direction(Game::sokoban, Direction::up)).next_state;
  const auto r = env.step(s, Action::direction(Game::sokoban, Direction::down));
  CHECK(r.reason == TerminationReason::move_budget);
}

TEST_CASE("tetris O piece has nine placements") {
  GameState s = reset(Game::tetris, {}, 0);
  s.piece = piece_from_letter('O');
  CHECK(Environment(Game::tetris, {}).legal_actions(s).size() == 9);
  s.piece = piece_from_letter('I');
  CHECK(Environment(Game::tetris, {}).legal_actions(s).size() == 7 + 10);
  s.piece = piece_from_letter('T');
  CHECK(Environment(Game::tetris, {}).legal_actions(s).size() == 8 + 9 + 8 + 9);
}

TEST_CASE("tetris first seven pieces form a permutation") {
  Environment env(Game::tetris, {});
  auto s = env.reset(11);
  std::vector<int> seen{s.piece};
  for (int i = 0; i < 6; ++i) {
    s = env.step(s, Action::placement(0, 0)).next_state;
    if (s.terminal) break;
    seen.push_back(s.piece);
  }
  if (seen.size() == 7) {
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  }
}

TEST_CASE("tetris line clear") {
  Environment env(Game::tetris, {});
  GameState s = env.reset(3);
  for (int c = 0; c < 10; ++c)
    if (c < 4 || c > 5) s.board.at(19, c) = 1, s.board.at(18, c) = 1;
  s.piece = piece_from_letter('O');
  const auto r = env.step(s, Action::placement(0, 4));
  CHECK(r.reward == 3);
  CHECK(r.next_state.counters.lines_cleared == 2);
  CHECK(r.next_state.counters.pieces_dropped == 1);
  CHECK(count_nonzero(r.next_state.board) == 0);
  CHECK(reported_score(r.next_state).reported == 3.0);
}

TEST_CASE("tetris rejects out-of-range placements") {
  Environment env(Game::tetris, {});
  GameState s = env.reset(3);
  s.piece = piece_from_letter('I');
  CHECK_THROWS_AS(env.step(s, Action::placement(0, 7)), Error);
  CHECK_THROWS_AS(env.step(s, Action::placement(4, 0)), Error);
  CHECK_THROWS_AS(env.step(s, Action::direction(Game::g2048, Direction::up)), Error);
}

TEST_CASE("tetris move budget") {
  EnvConfig cfg;
  cfg.move_budget = 2;
  Environment env(Game::tetris, cfg);
  auto s = env.reset(5);
  s = env.step(s, Action::placement(0, 0)).next_state;
  const auto r = env.step(s, Action::placement(0, 5));
  CHECK(r.reason == TerminationReason::move_budget);
  CHECK_THROWS_AS(env.step(r.next_state, Action::placement(0, 0)), Error);
  CHECK_THROWS_AS(env.legal_actions(r.next_state), Error);
}

TEST_CASE("candy reset has no matches") {
  const auto s = reset(Game::candy, {}, 3);
  CHECK(s.board.rows == 8);
  CHECK(s.board.cols == 8);
  CHECK(find_matches(s.board).empty());
  CHECK(Environment(Game::candy, {}).legal_actions(s).size() == 112);
}

TEST_CASE("resolve_cascades single run") {
  Grid g = grid_from({{1, 1, 1, 2}, {2, 3, 4, 3}, {3, 4, 2, 4}, {4, 2, 3, 2}});
  std::vector<int> refill{4, 2, 4};
  std::size_t next = 0;
  const int n = resolve_cascades(g, [&] { return refill[next++]; });
  CHECK(n == 3);
  CHECK(find_matches(g).empty());
}

TEST_CASE("resolve_cascades counts a cross of five once") {
  Grid g = grid_from({{2, 1, 3, 4, 2},
                      {3, 1, 4, 2, 3},
                      {1, 1, 1, 3, 4},
                      {4, 2, 3, 4, 2},
                      {2, 3, 4, 2, 3}});
  std::vector<int> refill{3, 4, 1, 2, 1};
  std::size_t next = 0;
  // Column 1 rows 0-2 and row 2 columns 0-2 share (2,1).
  CHECK(find_matches(g).size() == 5);
  const int n = resolve_cascades(g, [&] { return refill[next++]; });
  CHECK(n == 5);
  CHECK(next == 5);
}

TEST_CASE("resolve_cascades two rounds with a scripted refill") {
  // Refilling row 0 with 5,5,5 creates the second run.
  Grid g = grid_from({{1, 2, 3, 4}, {2, 3, 4, 1}, {3, 4, 1, 2}, {6, 6, 6, 3}});
  std::vector<int> refill{5, 5, 5, 1, 2, 4};
  std::size_t next = 0;
  const int n = resolve_cascades(g, [&] { return refill[next++]; });
  CHECK(n == 6);
  CHECK(next == 6);
  CHECK(find_matches(g).empty());
}

TEST_CASE("candy invalid swap is reverted and spends a move") {
  Environment env(Game::candy, {});
  auto s = env.reset(3);
  for (const auto& a : env.legal_actions(s)) {
    const auto r = env.step(s, a);
    if (r.reward == 0) {
      CHECK(r.next_state.board == s.board);
      CHECK(r.next_state.moves_used == 1);
      return;
    }
  }
  FAIL("no invalid swap found");
}

TEST_CASE("candy rejects non-adjacent swaps and ends after the session") {
  EnvConfig cfg;
  cfg.candy_session_moves = 2;
  Environment env(Game::candy, cfg);
  auto s = env.reset(9);
  CHECK_THROWS_AS(env.step(s, Action::swap({0, 0}, {1, 1})), Error);
  CHECK_THROWS_AS(env.step(s, Action::swap({0, 7}, {0, 8})), Error);
  s = env.step(s, Action::swap({0, 0}, {0, 1})).next_state;
  const auto r = env.step(s, Action::swap({0, 0}, {0, 1}));
  CHECK(r.reason == TerminationReason::session_end);
  EnvConfig few;
  few.candy_colors = 2;
  CHECK_THROWS_AS(Environment(Game::candy, few), Error);
}

TEST_CASE("wrong game state is rejected") {
  Environment env(Game::candy, {});
  CHECK_THROWS_AS(env.legal_actions(reset(Game::g2048, {}, 1)), Error);
}

TEST_CASE("state json round trip") {
  for (Game g : kAllGames) {
    EnvConfig cfg;
    cfg.level_pack = "tiny";
    Environment env(g, cfg);
    auto s = env.reset(42);
    for (int i = 0; i < 3 && !s.terminal; ++i) s = env.step(s, env.legal_actions(s).front()).next_state;
    CHECK(state_from_json(to_json(s)) == s);
  }
  CHECK_THROWS_AS(state_from_json(Json::parse("{\"game\":\"g2048\"}")), Error);
  CHECK_THROWS_AS(env_config_from_json(Json::parse("{\"colour\":3}")), Error);
  const auto c = env_config_from_json(Json::parse("{\"level_pack\":\"tiny\",\"move_budget\":9}"));
  CHECK(c.level_pack == "tiny");
  CHECK(c.move_budget == 9);
}

TEST_CASE("determinism of seeded trajectories") {
  for (Game g : kAllGames) {
    Environment env(g, {});
    auto run = [&] {
      auto s = env.reset(99);
      std::vector<GameState> trace{s};
      Rng pick(5);
      for (int i = 0; i < 40 && !s.terminal; ++i) {
        const auto legal = env.legal_actions(s);
        if (legal.empty()) break;
        s = env.step(s, legal[pick.below(legal.size())]).next_state;
        trace.push_back(s);
      }
      return trace;
    };
    CHECK(run() == run());
  }
}
