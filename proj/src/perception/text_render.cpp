#include <set>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/text.hpp"
#include "perception/perception.hpp"

namespace gameharness::perception {

using env::Game;
using env::GameState;
using env::SokobanCell;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::raw_text: return "raw_text";
    case Mode::structured_text: return "structured_text";
    case Mode::annotated_image: return "annotated_image";
    case Mode::combined: return "combined";
  }
  return "?";
}

Mode parse_mode(std::string_view name) {
  for (Mode m : kAllModes)
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::InvalidConfig, "unknown perception mode: " + std::string(name));
}

bool has_text(Mode mode) { return mode != Mode::annotated_image; }
bool has_image(Mode mode) { return mode == Mode::annotated_image || mode == Mode::combined; }

std::string_view candy_color_name(int value) {
  static constexpr std::string_view kNames[] = {"Red", "Green", "Blue", "Yellow", "Purple", "Orange"};
  return value >= 1 && value <= 6 ? kNames[value - 1] : "Unknown";
}

namespace {

void status_lines(const GameState& s, const env::EnvConfig& config, std::string& out) {
  switch (s.game) {
    case Game::sokoban: out += fmt::format("Level: {}\n", s.level_index + 1); break;
    case Game::tetris: out += fmt::format("Current piece: {}\n", env::piece_letter(s.piece)); break;
    case Game::candy:
      out += fmt::format("Moves remaining: {}\n", config.candy_session_moves - s.moves_used);
      break;
    case Game::g2048: break;
  }
  const double score = env::reported_score(s).reported;
  if (score == static_cast<double>(static_cast<long long>(score)))
    out += fmt::format("Score: {}\n", static_cast<long long>(score));
  else
    out += fmt::format("Score: {:.1f}\n", score);
}

std::string raw_grid(const GameState& s) {
  const env::Grid& g = s.board;
  if (s.game == Game::sokoban) return env::to_xsb(g);
  std::string out;
  for (int r = 0; r < g.rows; ++r) {
    std::vector<std::string> cells;
    for (int c = 0; c < g.cols; ++c) {
      const int v = g.at(r, c);
      switch (s.game) {
        case Game::g2048: cells.push_back(std::to_string(v)); break;
        case Game::tetris: cells.emplace_back(1, v ? env::piece_letter(v - 1) : '.'); break;
        case Game::candy: cells.emplace_back(1, candy_color_name(v).front()); break;
        case Game::sokoban: break;
      }
    }
    out += text::join(cells, " ");
    out += '\n';
  }
  return out;
}

void object_lines(const GameState& s, std::string& out) {
  const env::Grid& g = s.board;
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const int v = g.at(r, c);
      const auto line = [&](std::string_view object) { out += fmt::format("{} at ({},{})\n", object, r, c); };
      switch (s.game) {
        case Game::g2048:
          if (v) line(fmt::format("Tile {}", v));
          break;
        case Game::tetris:
          if (v) line(fmt::format("{} block", env::piece_letter(v - 1)));
          break;
        case Game::candy:
          if (v) line(fmt::format("{} candy", candy_color_name(v)));
          break;
        case Game::sokoban:
          switch (static_cast<SokobanCell>(v)) {
            case SokobanCell::floor: break;
            case SokobanCell::wall: line("Wall"); break;
            case SokobanCell::target: line("Target"); break;
            case SokobanCell::box: line("Box"); break;
            case SokobanCell::box_on_target: line("Box"), line("Target"); break;
            case SokobanCell::player: line("Player"); break;
            case SokobanCell::player_on_target: line("Player"), line("Target"); break;
          }
          break;
      }
    }
  }
}

void tetris_piece_lines(const GameState& s, std::string& out) {
  std::set<std::string> seen;
  for (int rot = 0; rot < 4; ++rot) {
    const auto& shape = env::piece_shape(s.piece, rot);
    std::vector<std::string> cells;
    for (const auto& c : shape.cells) cells.push_back(fmt::format("({},{})", c.row, c.col));
    auto joined = text::join(cells, " ");
    if (!seen.insert(joined).second) continue;
    out += fmt::format("Rotation {}: width {}, cells {}\n", rot, shape.width, joined);
  }
}

}  // namespace

std::string render_text(const GameState& state, bool structured, const env::EnvConfig& config) {
  std::string out;
  if (!structured) {
    out = raw_grid(state);
    status_lines(state, config, out);
    return out;
  }
  out += fmt::format("Game: {}\n", env::display_name(state.game));
  out += fmt::format("Grid: {} rows x {} columns\n", state.board.rows, state.board.cols);
  out += "Coordinates: (row,col), zero-indexed, origin top-left\n";
  status_lines(state, config, out);
  if (state.game == Game::tetris && state.piece >= 0) tetris_piece_lines(state, out);
  object_lines(state, out);
  return out;
}

Observation observe(const GameState& state, Mode mode, const env::EnvConfig& config,
                    const RenderStyle& style) {
  Observation o;
  o.mode = mode;
  o.game = state.game;
  o.turn = state.turn;
  if (has_text(mode)) o.text = render_text(state, mode != Mode::raw_text, config);
  if (has_image(mode)) o.image = render_image(state, style);
  return o;
}

}  // namespace gameharness::perception
