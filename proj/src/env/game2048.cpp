#include <algorithm>

#include "env/games.hpp"

namespace gameharness::env {

LineMerge slide_merge_line(std::array<int, 4> line, bool toward_head) {
  if (!toward_head) std::reverse(line.begin(), line.end());

  LineMerge out;
  std::size_t write = 0;
  int pending = 0;  // compacted tile not yet merged or written
  for (int v : line) {
    if (v == 0) continue;
    if (pending == v) {
      out.line[write++] = 2 * v;
      out.gain += 2 * v;
      pending = 0;
    } else {
      if (pending != 0) out.line[write++] = pending;
      pending = v;
    }
  }
  if (pending != 0) out.line[write++] = pending;

  if (!toward_head) std::reverse(out.line.begin(), out.line.end());
  return out;
}

namespace detail {
namespace {

constexpr int kSize = 4;

// Applies one slide to the whole board; returns the merge gain.
int slide_board(Grid& board, Direction d) {
  int gain = 0;
  for (int k = 0; k < kSize; ++k) {
    std::array<int, 4> line{};
    const bool horizontal = d == Direction::left || d == Direction::right;
    for (int i = 0; i < kSize; ++i) line[i] = horizontal ? board.at(k, i) : board.at(i, k);
    const bool toward_head = d == Direction::left || d == Direction::up;
    const LineMerge m = slide_merge_line(line, toward_head);
    gain += m.gain;
    for (int i = 0; i < kSize; ++i) (horizontal ? board.at(k, i) : board.at(i, k)) = m.line[i];
  }
  return gain;
}

void spawn_tile(Grid& board, Rng& rng) {
  std::vector<int> empty;
  for (int i = 0; i < static_cast<int>(board.cells.size()); ++i)
    if (board.cells[i] == 0) empty.push_back(i);
  if (empty.empty()) return;
  const auto cell = empty[rng.below(empty.size())];
  board.cells[cell] = rng.unit() < 0.9 ? 2 : 4;
}

bool any_legal(const Grid& board) {
  for (Direction d : kDirections) {
    Grid probe = board;
    slide_board(probe, d);
    if (probe != board) return true;
  }
  return false;
}

}  // namespace

GameState reset_2048(std::uint64_t seed) {
  GameState s;
  s.game = Game::g2048;
  s.board = Grid(kSize, kSize);
  s.rng = Rng(seed);
  spawn_tile(s.board, s.rng);
  spawn_tile(s.board, s.rng);
  return s;
}

std::vector<Action> legal_2048(const GameState& state) {
  std::vector<Action> out;
  for (Direction d : kDirections) {
    Grid probe = state.board;
    slide_board(probe, d);
    if (probe != state.board) out.push_back(Action::direction(Game::g2048, d));
  }
  return out;
}

StepResult step_2048(const GameState& state, Direction d, int budget) {
  GameState next = state;
  const int gain = slide_board(next.board, d);
  const bool changed = next.board != state.board;
  if (changed) {
    next.counters.merged_sum += gain;
    spawn_tile(next.board, next.rng);
    next.stagnation = 0;
  } else {
    // An unchanged board implies no merge happened either.
    next.stagnation = std::min(next.stagnation + 1, kStagnationLimit);
  }
  ++next.turn;
  ++next.moves_used;

  if (next.stagnation >= kStagnationLimit)
    next.terminal = TerminationReason::stagnation;
  else if (!any_legal(next.board))
    next.terminal = TerminationReason::game_over;
  else if (budget > 0 && next.moves_used >= budget)
    next.terminal = TerminationReason::move_budget;
  return finish(std::move(next), gain);
}

}  // namespace detail
}  // namespace gameharness::env
