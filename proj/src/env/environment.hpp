#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "env/types.hpp"

namespace gameharness::env {

// ---- Sokoban ---------------------------------------------------------------

enum class SokobanCell : int {
  floor = 0,
  wall = 1,
  target = 2,
  box = 3,
  box_on_target = 4,
  player = 5,
  player_on_target = 6,
};

struct SokobanLevel {
  std::string id;
  Grid grid;  // cells hold SokobanCell values
  friend bool operator==(const SokobanLevel&, const SokobanLevel&) = default;
};

// Parses XSB text: one level per blank-line separated block; '#' wall,
// '@' player, '+' player on target, '$' box, '*' box on target, '.' target,
// ' ', '-' or '_' floor. Lines starting with ';' name the following level.
// Throws Error{InvalidConfig} when a level breaks the level invariants.
std::vector<SokobanLevel> parse_xsb(std::string_view text);
std::string to_xsb(const Grid& grid);

// Resolves a bundled pack name ("default", "tiny") or a filesystem path.
std::vector<SokobanLevel> load_level_pack(std::string_view name_or_path);

// ---- configuration ---------------------------------------------------------

struct EnvConfig {
  std::string level_pack = "default";
  std::vector<SokobanLevel> levels;  // resolved from level_pack when empty
  int move_budget = 0;               // 0 selects the per-game default
  int candy_colors = 4;
  int candy_session_moves = 50;
};

inline constexpr int kDefaultSokobanBudget = 100;  // steps per level
inline constexpr int kDefaultTetrisBudget = 80;    // placements
inline constexpr int kStagnationLimit = 10;

// 0 means unlimited.
int effective_move_budget(Game game, const EnvConfig& config);

// ---- per-game kernels ------------------------------------------------------

struct LineMerge {
  std::array<int, 4> line{};
  int gain = 0;
  friend bool operator==(const LineMerge&, const LineMerge&) = default;
};

// Compacts a 2048 line toward index 0 (toward_head) or index 3 and merges
// equal neighbours once per step, scanning from the head.
LineMerge slide_merge_line(std::array<int, 4> line, bool toward_head);

using ColorSource = std::function<int()>;

// Union of all cells lying in a horizontal or vertical run of >= 3 equal
// non-zero values, row-major.
std::vector<Coord> find_matches(const Grid& board);

// Match, eliminate, apply gravity and refill until stable. Refill visits
// columns left to right, empty cells top to bottom. Returns the number of
// cells eliminated over all rounds.
int resolve_cascades(Grid& board, const ColorSource& next_color);
int resolve_cascades(Grid& board, Rng& rng, int colors);

// Corner rule: a box off-target with walls on two orthogonally adjacent sides.
// Throws Error{WrongGame} for non-Sokoban states.
bool detect_deadlock(const GameState& state);

inline constexpr int kTetrisWidth = 10;
inline constexpr int kTetrisHeight = 20;
inline constexpr int kTetrisPieceCount = 7;

struct PieceShape {
  std::array<Coord, 4> cells{};  // offsets from the bounding box's top-left
  int width = 0;
  int height = 0;
};

const PieceShape& piece_shape(int piece, int rotation);
char piece_letter(int piece);
int piece_from_letter(char letter);

inline constexpr int kCandyRows = 8;
inline constexpr int kCandyCols = 8;

// ---- environment -----------------------------------------------------------

class Environment {
 public:
  Environment(Game game, EnvConfig config);

  Game game() const { return game_; }
  const EnvConfig& config() const { return config_; }

  GameState reset(std::uint64_t seed) const;
  std::vector<Action> legal_actions(const GameState& state) const;
  StepResult step(const GameState& state, const Action& action) const;

 private:
  Game game_;
  EnvConfig config_;
};

GameState reset(Game game, const EnvConfig& config, std::uint64_t seed);
Score reported_score(const GameState& state);

}  // namespace gameharness::env
