#include <cstdlib>

#include "common/error.hpp"
#include "env/games.hpp"

namespace gameharness::env {

std::vector<Coord> find_matches(const Grid& board) {
  std::vector<char> marked(board.cells.size(), 0);
  const auto mark_runs = [&](bool horizontal) {
    const int outer = horizontal ? board.rows : board.cols;
    const int inner = horizontal ? board.cols : board.rows;
    for (int o = 0; o < outer; ++o) {
      int run_start = 0;
      for (int i = 1; i <= inner; ++i) {
        const auto value = [&](int k) { return horizontal ? board.at(o, k) : board.at(k, o); };
        if (i < inner && value(i) == value(run_start)) continue;
        if (i - run_start >= 3 && value(run_start) != 0) {
          for (int k = run_start; k < i; ++k) {
            const int r = horizontal ? o : k, c = horizontal ? k : o;
            marked[static_cast<std::size_t>(r * board.cols + c)] = 1;
          }
        }
        run_start = i;
      }
    }
  };
  mark_runs(true);
  mark_runs(false);

  std::vector<Coord> out;
  for (int r = 0; r < board.rows; ++r)
    for (int c = 0; c < board.cols; ++c)
      if (marked[static_cast<std::size_t>(r * board.cols + c)]) out.push_back({r, c});
  return out;
}

int resolve_cascades(Grid& board, const ColorSource& next_color) {
  int eliminated = 0;
  for (;;) {
    const auto matched = find_matches(board);
    if (matched.empty()) break;
    eliminated += static_cast<int>(matched.size());
    for (const auto& m : matched) board.at(m.row, m.col) = 0;

    for (int c = 0; c < board.cols; ++c) {
      int write = board.rows - 1;
      for (int r = board.rows - 1; r >= 0; --r) {
        if (board.at(r, c) == 0) continue;
        const int v = board.at(r, c);
        board.at(r, c) = 0;
        board.at(write--, c) = v;
      }
    }
    for (int c = 0; c < board.cols; ++c)
      for (int r = 0; r < board.rows && board.at(r, c) == 0; ++r) board.at(r, c) = next_color();
  }
  return eliminated;
}

int resolve_cascades(Grid& board, Rng& rng, int colors) {
  return resolve_cascades(board, [&] { return static_cast<int>(rng.below(static_cast<std::uint64_t>(colors))) + 1; });
}

namespace detail {

GameState reset_candy(std::uint64_t seed, int colors) {
  GameState s;
  s.game = Game::candy;
  s.rng = Rng(seed);
  // Re-roll whole boards from the same stream until one has no match.
  do {
    s.board = Grid(kCandyRows, kCandyCols);
    for (int& cell : s.board.cells) cell = static_cast<int>(s.rng.below(static_cast<std::uint64_t>(colors))) + 1;
  } while (!find_matches(s.board).empty());
  return s;
}

std::vector<Action> legal_candy(const GameState& state) {
  std::vector<Action> out;
  const Grid& g = state.board;
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c + 1 < g.cols; ++c) out.push_back(Action::swap({r, c}, {r, c + 1}));
  for (int r = 0; r + 1 < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) out.push_back(Action::swap({r, c}, {r + 1, c}));
  return out;
}

StepResult step_candy(const GameState& state, const Swap& swap, int colors, int session_moves) {
  const Grid& g = state.board;
  const Coord a = swap.first, b = swap.second;
  if (!g.in_bounds(a.row, a.col) || !g.in_bounds(b.row, b.col))
    throw Error(ErrorCode::IllegalAction, "candy swap out of bounds");
  if (std::abs(a.row - b.row) + std::abs(a.col - b.col) != 1)
    throw Error(ErrorCode::IllegalAction, "candy swap cells are not orthogonally adjacent");

  GameState next = state;
  ++next.turn;
  ++next.moves_used;
  std::swap(next.board.at(a.row, a.col), next.board.at(b.row, b.col));

  int eliminated = 0;
  if (find_matches(next.board).empty()) {
    next.board = state.board;  // invalid swap: reverted, move still spent
  } else {
    eliminated = resolve_cascades(next.board, next.rng, colors);
    next.counters.candies_eliminated += eliminated;
  }
  if (next.moves_used >= session_moves) next.terminal = TerminationReason::session_end;
  return finish(std::move(next), eliminated);
}

}  // namespace detail
}  // namespace gameharness::env
