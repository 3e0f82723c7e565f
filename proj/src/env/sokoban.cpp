#include <algorithm>
#include <queue>

#include "common/assets.hpp"
#include "common/error.hpp"
#include "common/text.hpp"
#include "env/games.hpp"

namespace gameharness::env {
namespace {

using Cell = SokobanCell;

int as_int(Cell c) { return static_cast<int>(c); }
Cell cell_at(const Grid& g, int r, int c) { return static_cast<Cell>(g.at(r, c)); }

bool is_box(Cell c) { return c == Cell::box || c == Cell::box_on_target; }
bool is_target(Cell c) {
  return c == Cell::target || c == Cell::box_on_target || c == Cell::player_on_target;
}
bool is_player(Cell c) { return c == Cell::player || c == Cell::player_on_target; }

Coord delta(Direction d) {
  switch (d) {
    case Direction::up: return {-1, 0};
    case Direction::down: return {1, 0};
    case Direction::left: return {0, -1};
    case Direction::right: return {0, 1};
  }
  return {0, 0};
}

std::optional<Cell> cell_from_char(char ch) {
  switch (ch) {
    case '#': return Cell::wall;
    case ' ':
    case '-':
    case '_': return Cell::floor;
    case '.': return Cell::target;
    case '$': return Cell::box;
    case '*': return Cell::box_on_target;
    case '@': return Cell::player;
    case '+': return Cell::player_on_target;
    default: return std::nullopt;
  }
}

char char_from_cell(Cell c) {
  switch (c) {
    case Cell::floor: return ' ';
    case Cell::wall: return '#';
    case Cell::target: return '.';
    case Cell::box: return '$';
    case Cell::box_on_target: return '*';
    case Cell::player: return '@';
    case Cell::player_on_target: return '+';
  }
  return '?';
}

Coord find_player(const Grid& g) {
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c)
      if (is_player(cell_at(g, r, c))) return {r, c};
  return {-1, -1};
}

int boxes_on_targets(const Grid& g) {
  return static_cast<int>(std::count(g.cells.begin(), g.cells.end(), as_int(Cell::box_on_target)));
}

int boxes_total(const Grid& g) {
  return static_cast<int>(std::count_if(g.cells.begin(), g.cells.end(),
                                        [](int v) { return is_box(static_cast<Cell>(v)); }));
}

void validate_level(const SokobanLevel& level) {
  const Grid& g = level.grid;
  int players = 0, boxes = 0, targets = 0;
  for (int v : g.cells) {
    const auto c = static_cast<Cell>(v);
    players += is_player(c);
    boxes += is_box(c);
    targets += is_target(c);
  }
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "sokoban level '" + level.id + "': " + why);
  };
  if (players != 1) fail("expected exactly one player, found " + std::to_string(players));
  if (boxes == 0) fail("no boxes");
  if (boxes != targets) fail("box count differs from target count");

  // Every cell reachable from the player without crossing a wall must be
  // interior, i.e. the level is closed by walls.
  const Coord start = find_player(g);
  std::vector<char> seen(g.cells.size(), 0);
  std::queue<Coord> todo;
  todo.push(start);
  seen[static_cast<std::size_t>(start.row * g.cols + start.col)] = 1;
  while (!todo.empty()) {
    const Coord p = todo.front();
    todo.pop();
    if (p.row == 0 || p.col == 0 || p.row == g.rows - 1 || p.col == g.cols - 1)
      fail("outer boundary is not closed by walls");
    for (Direction d : kDirections) {
      const Coord dd = delta(d);
      const Coord q{p.row + dd.row, p.col + dd.col};
      const auto idx = static_cast<std::size_t>(q.row * g.cols + q.col);
      if (seen[idx] || cell_at(g, q.row, q.col) == Cell::wall) continue;
      seen[idx] = 1;
      todo.push(q);
    }
  }
  // Boxes and targets must sit inside the closed region.
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) {
      const Cell cell = cell_at(g, r, c);
      if ((is_box(cell) || is_target(cell)) && !seen[static_cast<std::size_t>(r * g.cols + c)])
        fail("box or target outside the player's region");
    }
}

}  // namespace

std::vector<SokobanLevel> parse_xsb(std::string_view text) {
  std::vector<SokobanLevel> levels;
  std::vector<std::string> rows;
  std::string pending_id;

  const auto flush = [&] {
    if (rows.empty()) return;
    int width = 0;
    for (const auto& r : rows) width = std::max(width, static_cast<int>(r.size()));
    SokobanLevel level;
    level.id = pending_id.empty() ? "level-" + std::to_string(levels.size() + 1) : pending_id;
    level.grid = Grid(static_cast<int>(rows.size()), width, as_int(Cell::floor));
    for (int r = 0; r < level.grid.rows; ++r)
      for (int c = 0; c < static_cast<int>(rows[r].size()); ++c)
        level.grid.at(r, c) = as_int(*cell_from_char(rows[r][c]));
    validate_level(level);
    levels.push_back(std::move(level));
    rows.clear();
    pending_id.clear();
  };

  for (const auto& raw : text::split_lines(text)) {
    const std::string_view line = raw;
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() == ';') {
      flush();
      pending_id = std::string(text::trim(line.substr(1)));
      continue;
    }
    std::string row(line);
    while (!row.empty() && row.back() == ' ') row.pop_back();
    for (char ch : row)
      if (!cell_from_char(ch))
        throw Error(ErrorCode::InvalidConfig,
                    std::string("invalid XSB character '") + ch + "' in line: " + row);
    rows.push_back(std::move(row));
  }
  flush();
  return levels;
}

std::string to_xsb(const Grid& grid) {
  std::string out;
  for (int r = 0; r < grid.rows; ++r) {
    std::string row;
    for (int c = 0; c < grid.cols; ++c) row += char_from_cell(cell_at(grid, r, c));
    while (!row.empty() && row.back() == ' ') row.pop_back();
    out += row;
    out += '\n';
  }
  return out;
}

std::vector<SokobanLevel> load_level_pack(std::string_view name_or_path) {
  std::vector<SokobanLevel> levels;
  if (auto bundled = assets::find("levels/" + std::string(name_or_path) + ".xsb"))
    levels = parse_xsb(*bundled);
  else
    levels = parse_xsb(text::read_file(std::string(name_or_path)));
  if (levels.empty())
    throw Error(ErrorCode::InvalidConfig, "empty sokoban level pack: " + std::string(name_or_path));
  return levels;
}

bool detect_deadlock(const GameState& state) {
  if (state.game != Game::sokoban)
    throw Error(ErrorCode::WrongGame, "detect_deadlock requires a sokoban state");
  const Grid& g = state.board;
  const auto wall = [&](int r, int c) {
    return !g.in_bounds(r, c) || cell_at(g, r, c) == Cell::wall;
  };
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (cell_at(g, r, c) != Cell::box) continue;
      const bool vertical = wall(r - 1, c) || wall(r + 1, c);
      const bool horizontal = wall(r, c - 1) || wall(r, c + 1);
      if (vertical && horizontal) return true;
    }
  }
  return false;
}

namespace detail {
namespace {

void load_level(GameState& s, const SokobanLevel& level) {
  s.board = level.grid;
  s.moves_used = 0;
  s.level_initial_on_target = boxes_on_targets(level.grid);
  s.level_best = 0;
}

bool can_move(const Grid& g, Coord player, Direction d) {
  const Coord dd = delta(d);
  const Coord t{player.row + dd.row, player.col + dd.col};
  if (!g.in_bounds(t.row, t.col)) return false;
  const Cell tc = cell_at(g, t.row, t.col);
  if (tc == Cell::wall) return false;
  if (!is_box(tc)) return true;
  const Coord b{t.row + dd.row, t.col + dd.col};
  if (!g.in_bounds(b.row, b.col)) return false;
  const Cell bc = cell_at(g, b.row, b.col);
  return bc != Cell::wall && !is_box(bc);
}

}  // namespace

GameState reset_sokoban(const std::vector<SokobanLevel>& levels, std::uint64_t seed) {
  GameState s;
  s.game = Game::sokoban;
  s.rng = Rng(seed);
  s.level_index = 0;
  load_level(s, levels.front());
  return s;
}

std::vector<Action> legal_sokoban(const GameState& state) {
  std::vector<Action> out;
  const Coord p = find_player(state.board);
  for (Direction d : kDirections)
    if (can_move(state.board, p, d)) out.push_back(Action::direction(Game::sokoban, d));
  return out;
}

StepResult step_sokoban(const GameState& state, Direction d, const std::vector<SokobanLevel>& levels,
                        int budget) {
  GameState next = state;
  Grid& g = next.board;
  const Coord p = find_player(g);
  // Blocked moves are no-ops that still consume a step.
  if (can_move(g, p, d)) {
    const Coord dd = delta(d);
    const Coord t{p.row + dd.row, p.col + dd.col};
    if (is_box(cell_at(g, t.row, t.col))) {
      const Coord b{t.row + dd.row, t.col + dd.col};
      g.at(b.row, b.col) = as_int(is_target(cell_at(g, b.row, b.col)) ? Cell::box_on_target : Cell::box);
    }
    g.at(t.row, t.col) = as_int(is_target(cell_at(g, t.row, t.col)) ? Cell::player_on_target : Cell::player);
    g.at(p.row, p.col) = as_int(is_target(cell_at(g, p.row, p.col)) ? Cell::target : Cell::floor);
  }
  ++next.turn;
  ++next.moves_used;

  const int progress = boxes_on_targets(g) - next.level_initial_on_target;
  const int reward = std::max(0, progress - next.level_best);
  next.level_best += reward;
  next.counters.boxes_on_targets += reward;

  if (boxes_on_targets(g) == boxes_total(g)) {
    if (next.level_index + 1 < static_cast<int>(levels.size())) {
      ++next.level_index;
      load_level(next, levels[static_cast<std::size_t>(next.level_index)]);
    } else {
      next.terminal = TerminationReason::won;
    }
  } else if (detect_deadlock(next)) {
    next.terminal = TerminationReason::deadlock;
  } else if (budget > 0 && next.moves_used >= budget) {
    next.terminal = TerminationReason::move_budget;
  } else if (legal_sokoban(next).empty()) {
    next.terminal = TerminationReason::game_over;
  }
  return finish(std::move(next), reward);
}

}  // namespace detail
}  // namespace gameharness::env
