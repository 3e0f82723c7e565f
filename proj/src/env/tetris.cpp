#include <algorithm>
#include <set>

#include "common/error.hpp"
#include "env/games.hpp"

namespace gameharness::env {
namespace {

constexpr char kLetters[kTetrisPieceCount] = {'I', 'O', 'T', 'S', 'Z', 'J', 'L'};

// Spawn orientation of each piece as (row, col) offsets.
constexpr std::array<std::array<Coord, 4>, kTetrisPieceCount> kSpawnCells{{
    {{{0, 0}, {0, 1}, {0, 2}, {0, 3}}},  // I
    {{{0, 0}, {0, 1}, {1, 0}, {1, 1}}},  // O
    {{{0, 1}, {1, 0}, {1, 1}, {1, 2}}},  // T
    {{{0, 1}, {0, 2}, {1, 0}, {1, 1}}},  // S
    {{{0, 0}, {0, 1}, {1, 1}, {1, 2}}},  // Z
    {{{0, 0}, {1, 0}, {1, 1}, {1, 2}}},  // J
    {{{0, 2}, {1, 0}, {1, 1}, {1, 2}}},  // L
}};

PieceShape normalize(std::array<Coord, 4> cells) {
  int min_r = 99, min_c = 99, max_r = -99, max_c = -99;
  for (const auto& c : cells) {
    min_r = std::min(min_r, c.row);
    min_c = std::min(min_c, c.col);
    max_r = std::max(max_r, c.row);
    max_c = std::max(max_c, c.col);
  }
  PieceShape s;
  for (std::size_t i = 0; i < 4; ++i) s.cells[i] = {cells[i].row - min_r, cells[i].col - min_c};
  std::sort(s.cells.begin(), s.cells.end(),
            [](Coord a, Coord b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  s.width = max_c - min_c + 1;
  s.height = max_r - min_r + 1;
  return s;
}

using ShapeTable = std::array<std::array<PieceShape, 4>, kTetrisPieceCount>;

ShapeTable build_shapes() {
  ShapeTable table{};
  for (int p = 0; p < kTetrisPieceCount; ++p) {
    std::array<Coord, 4> cells = kSpawnCells[static_cast<std::size_t>(p)];
    for (int r = 0; r < 4; ++r) {
      table[static_cast<std::size_t>(p)][static_cast<std::size_t>(r)] = normalize(cells);
      // Clockwise quarter turn: (row, col) -> (col, -row).
      for (auto& c : cells) c = {c.col, -c.row};
      cells = normalize(cells).cells;
    }
  }
  return table;
}

const ShapeTable& shapes() {
  static const ShapeTable table = build_shapes();
  return table;
}

bool fits(const Grid& board, const PieceShape& shape, int top, int left) {
  for (const auto& c : shape.cells) {
    const int r = top + c.row, col = left + c.col;
    if (r < 0 || r >= board.rows || col < 0 || col >= board.cols) return false;
    if (board.at(r, col) != 0) return false;
  }
  return true;
}

int spawn_column(const PieceShape& shape) { return (kTetrisWidth - shape.width) / 2; }

}  // namespace

const PieceShape& piece_shape(int piece, int rotation) {
  return shapes()[static_cast<std::size_t>(piece)][static_cast<std::size_t>(rotation & 3)];
}

char piece_letter(int piece) {
  return piece >= 0 && piece < kTetrisPieceCount ? kLetters[piece] : '?';
}

int piece_from_letter(char letter) {
  for (int p = 0; p < kTetrisPieceCount; ++p)
    if (kLetters[p] == letter) return p;
  return -1;
}

namespace detail {
namespace {

int draw_piece(GameState& s) {
  if (s.bag.empty()) {
    s.bag = {0, 1, 2, 3, 4, 5, 6};
    for (std::size_t i = s.bag.size() - 1; i > 0; --i)
      std::swap(s.bag[i], s.bag[s.rng.below(i + 1)]);
  }
  const int piece = s.bag.back();
  s.bag.pop_back();
  return piece;
}

bool spawn_blocked(const GameState& s) {
  const PieceShape& shape = piece_shape(s.piece, 0);
  return !fits(s.board, shape, 0, spawn_column(shape));
}

}  // namespace

GameState reset_tetris(std::uint64_t seed) {
  GameState s;
  s.game = Game::tetris;
  s.board = Grid(kTetrisHeight, kTetrisWidth);
  s.rng = Rng(seed);
  s.piece = draw_piece(s);
  return s;
}

std::vector<Action> legal_tetris(const GameState& state) {
  std::vector<Action> out;
  std::set<std::vector<std::pair<int, int>>> seen;
  for (int rot = 0; rot < 4; ++rot) {
    const PieceShape& shape = piece_shape(state.piece, rot);
    std::vector<std::pair<int, int>> key;
    for (const auto& c : shape.cells) key.emplace_back(c.row, c.col);
    if (!seen.insert(key).second) continue;  // rotation identical to an earlier one
    for (int col = 0; col + shape.width <= kTetrisWidth; ++col)
      out.push_back(Action::placement(rot, col));
  }
  return out;
}

StepResult step_tetris(const GameState& state, Placement p, int budget) {
  if (p.rotation < 0 || p.rotation > 3 || p.column < 0 || p.column >= kTetrisWidth)
    throw Error(ErrorCode::IllegalAction, "tetris placement out of range");
  const PieceShape& shape = piece_shape(state.piece, p.rotation);
  if (p.column + shape.width > kTetrisWidth)
    throw Error(ErrorCode::IllegalAction, "tetris piece does not fit horizontally at this column");

  GameState next = state;
  ++next.turn;
  ++next.moves_used;

  if (!fits(next.board, shape, 0, p.column)) {
    // The stack reaches the top at this column; the piece cannot enter.
    next.terminal = TerminationReason::game_over;
    return finish(std::move(next), 0.0);
  }
  int top = 0;
  while (fits(next.board, shape, top + 1, p.column)) ++top;
  for (const auto& c : shape.cells) next.board.at(top + c.row, p.column + c.col) = state.piece + 1;

  int cleared = 0;
  Grid compacted(kTetrisHeight, kTetrisWidth);
  int write = kTetrisHeight - 1;
  for (int r = kTetrisHeight - 1; r >= 0; --r) {
    bool full = true;
    for (int c = 0; c < kTetrisWidth; ++c) full = full && next.board.at(r, c) != 0;
    if (full) {
      ++cleared;
      continue;
    }
    for (int c = 0; c < kTetrisWidth; ++c) compacted.at(write, c) = next.board.at(r, c);
    --write;
  }
  next.board = std::move(compacted);
  next.counters.pieces_dropped += 1;
  next.counters.lines_cleared += cleared;

  next.piece = draw_piece(next);
  if (spawn_blocked(next))
    next.terminal = TerminationReason::game_over;
  else if (budget > 0 && next.moves_used >= budget)
    next.terminal = TerminationReason::move_budget;
  return finish(std::move(next), 1.0 + cleared);
}

}  // namespace detail
}  // namespace gameharness::env
