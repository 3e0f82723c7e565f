#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "common/rng.hpp"

namespace gameharness::env {

enum class Game { sokoban, g2048, tetris, candy };

inline constexpr Game kAllGames[] = {Game::sokoban, Game::g2048, Game::tetris, Game::candy};

std::string_view to_string(Game game);
// Human-facing title used in prompts ("2048", "Sokoban", "Tetris", "Candy Crush").
std::string_view display_name(Game game);
// Throws Error{UnknownGame} for anything outside the closed set.
Game parse_game(std::string_view name);

enum class TerminationReason { won, game_over, stagnation, deadlock, move_budget, session_end };

std::string_view to_string(TerminationReason reason);
TerminationReason parse_termination(std::string_view name);

enum class Direction { up, down, left, right };

inline constexpr Direction kDirections[] = {Direction::up, Direction::down, Direction::left,
                                            Direction::right};

std::string_view to_string(Direction d);

struct Coord {
  int row = 0;
  int col = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

// Tetris: hard-drop the current piece in `rotation` (clockwise quarter turns)
// with its bounding box's left edge at `column`.
struct Placement {
  int rotation = 0;
  int column = 0;
  friend bool operator==(const Placement&, const Placement&) = default;
};

// Candy: exchange two orthogonally adjacent cells.
struct Swap {
  Coord first;
  Coord second;
  friend bool operator==(const Swap&, const Swap&) = default;
};

struct Action {
  Game game = Game::g2048;
  std::variant<Direction, Placement, Swap> move;

  static Action direction(Game game, Direction d) { return {game, d}; }
  static Action placement(int rotation, int column) {
    return {Game::tetris, Placement{rotation, column}};
  }
  static Action swap(Coord a, Coord b) { return {Game::candy, Swap{a, b}}; }

  friend bool operator==(const Action&, const Action&) = default;
};

// Canonical move token, i.e. what follows "move:" in a model response:
// "up" | "rotation=R column=C" | "swap (r1,c1) (r2,c2)".
std::string to_token(const Action& action);

struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<int> cells;

  Grid() = default;
  Grid(int r, int c, int fill = 0) : rows(r), cols(c), cells(static_cast<std::size_t>(r * c), fill) {}

  int& at(int r, int c) { return cells[static_cast<std::size_t>(r * cols + c)]; }
  int at(int r, int c) const { return cells[static_cast<std::size_t>(r * cols + c)]; }
  bool in_bounds(int r, int c) const { return r >= 0 && r < rows && c >= 0 && c < cols; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct ScoreCounters {
  std::int64_t boxes_on_targets = 0;
  std::int64_t pieces_dropped = 0;
  std::int64_t lines_cleared = 0;
  std::int64_t merged_sum = 0;
  std::int64_t candies_eliminated = 0;
  friend bool operator==(const ScoreCounters&, const ScoreCounters&) = default;
};

struct GameState {
  Game game = Game::g2048;
  Grid board;
  Rng rng;
  int turn = 0;
  ScoreCounters counters;
  int stagnation = 0;  // 2048 only, in [0, 10]
  int moves_used = 0;  // counted against the move budget; per level for Sokoban

  // Sokoban bookkeeping: level index within the pack, the level's initial
  // boxes-on-targets and the high-water mark above it.
  int level_index = 0;
  int level_initial_on_target = 0;
  int level_best = 0;

  // Tetris: current piece (0..6 for I,O,T,S,Z,J,L) and the undrawn 7-bag.
  int piece = -1;
  std::vector<int> bag;

  std::optional<TerminationReason> terminal;

  friend bool operator==(const GameState&, const GameState&) = default;
};

struct StepResult {
  GameState next_state;
  double reward = 0.0;
  bool terminated = false;
  std::optional<TerminationReason> reason;
};

struct Score {
  Game game = Game::g2048;
  ScoreCounters raw;
  double reported = 0.0;
};

}  // namespace gameharness::env
