#include "env/environment.hpp"

#include <cmath>

#include <fmt/format.h>

#include "common/error.hpp"
#include "env/games.hpp"

namespace gameharness::env {

std::string_view to_string(Game game) {
  switch (game) {
    case Game::sokoban: return "sokoban";
    case Game::g2048: return "g2048";
    case Game::tetris: return "tetris";
    case Game::candy: return "candy";
  }
  return "?";
}

std::string_view display_name(Game game) {
  switch (game) {
    case Game::sokoban: return "Sokoban";
    case Game::g2048: return "2048";
    case Game::tetris: return "Tetris";
    case Game::candy: return "Candy Crush";
  }
  return "?";
}

Game parse_game(std::string_view name) {
  for (Game g : kAllGames)
    if (to_string(g) == name) return g;
  throw Error(ErrorCode::UnknownGame, "unknown game: '" + std::string(name) +
                                          "' (expected sokoban, g2048, tetris or candy)");
}

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::won: return "won";
    case TerminationReason::game_over: return "game_over";
    case TerminationReason::stagnation: return "stagnation";
    case TerminationReason::deadlock: return "deadlock";
    case TerminationReason::move_budget: return "move_budget";
    case TerminationReason::session_end: return "session_end";
  }
  return "?";
}

TerminationReason parse_termination(std::string_view name) {
  for (auto r : {TerminationReason::won, TerminationReason::game_over, TerminationReason::stagnation,
                 TerminationReason::deadlock, TerminationReason::move_budget,
                 TerminationReason::session_end})
    if (to_string(r) == name) return r;
  throw Error(ErrorCode::InvalidConfig, "unknown termination reason: " + std::string(name));
}

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
  }
  return "?";
}

std::string to_token(const Action& action) {
  if (const auto* d = std::get_if<Direction>(&action.move)) return std::string(to_string(*d));
  if (const auto* p = std::get_if<Placement>(&action.move))
    return fmt::format("rotation={} column={}", p->rotation, p->column);
  const auto& s = std::get<Swap>(action.move);
  return fmt::format("swap ({},{}) ({},{})", s.first.row, s.first.col, s.second.row, s.second.col);
}

int effective_move_budget(Game game, const EnvConfig& config) {
  switch (game) {
    case Game::sokoban: return config.move_budget > 0 ? config.move_budget : kDefaultSokobanBudget;
    case Game::tetris: return config.move_budget > 0 ? config.move_budget : kDefaultTetrisBudget;
    case Game::g2048: return config.move_budget;
    case Game::candy: return config.candy_session_moves;
  }
  return 0;
}

namespace detail {

StepResult finish(GameState next, double reward) {
  StepResult out;
  out.reward = reward;
  out.reason = next.terminal;
  out.terminated = next.terminal.has_value();
  out.next_state = std::move(next);
  return out;
}

}  // namespace detail

Environment::Environment(Game game, EnvConfig config) : game_(game), config_(std::move(config)) {
  if (config_.move_budget < 0) throw Error(ErrorCode::InvalidConfig, "move_budget must be >= 0");
  switch (game_) {
    case Game::sokoban:
      if (config_.levels.empty()) config_.levels = load_level_pack(config_.level_pack);
      break;
    case Game::candy:
      if (config_.candy_colors < 4 || config_.candy_colors > 6)
        throw Error(ErrorCode::InvalidConfig, "candy_colors must be in [4, 6]");
      if (config_.candy_session_moves <= 0)
        throw Error(ErrorCode::InvalidConfig, "candy_session_moves must be > 0");
      break;
    default:
      break;
  }
}

GameState Environment::reset(std::uint64_t seed) const {
  switch (game_) {
    case Game::sokoban: return detail::reset_sokoban(config_.levels, seed);
    case Game::g2048: return detail::reset_2048(seed);
    case Game::tetris: return detail::reset_tetris(seed);
    case Game::candy: return detail::reset_candy(seed, config_.candy_colors);
  }
  throw Error(ErrorCode::UnknownGame, "unknown game");
}

std::vector<Action> Environment::legal_actions(const GameState& state) const {
  if (state.game != game_) throw Error(ErrorCode::WrongGame, "state belongs to another game");
  if (state.terminal) throw Error(ErrorCode::TerminalState, "state is terminal");
  switch (game_) {
    case Game::sokoban: return detail::legal_sokoban(state);
    case Game::g2048: return detail::legal_2048(state);
    case Game::tetris: return detail::legal_tetris(state);
    case Game::candy: return detail::legal_candy(state);
  }
  return {};
}

StepResult Environment::step(const GameState& state, const Action& action) const {
  if (state.game != game_) throw Error(ErrorCode::WrongGame, "state belongs to another game");
  if (state.terminal) throw Error(ErrorCode::TerminalState, "state is terminal");
  if (action.game != game_)
    throw Error(ErrorCode::IllegalAction, "action is tagged for " + std::string(to_string(action.game)));
  const int budget = effective_move_budget(game_, config_);
  switch (game_) {
    case Game::sokoban:
    case Game::g2048: {
      const auto* d = std::get_if<Direction>(&action.move);
      if (!d) throw Error(ErrorCode::IllegalAction, "expected a direction");
      return game_ == Game::g2048 ? detail::step_2048(state, *d, budget)
                                  : detail::step_sokoban(state, *d, config_.levels, budget);
    }
    case Game::tetris: {
      const auto* p = std::get_if<Placement>(&action.move);
      if (!p) throw Error(ErrorCode::IllegalAction, "expected a placement");
      return detail::step_tetris(state, *p, budget);
    }
    case Game::candy: {
      const auto* s = std::get_if<Swap>(&action.move);
      if (!s) throw Error(ErrorCode::IllegalAction, "expected a swap");
      return detail::step_candy(state, *s, config_.candy_colors, config_.candy_session_moves);
    }
  }
  throw Error(ErrorCode::UnknownGame, "unknown game");
}

GameState reset(Game game, const EnvConfig& config, std::uint64_t seed) {
  return Environment(game, config).reset(seed);
}

Score reported_score(const GameState& state) {
  Score s;
  s.game = state.game;
  s.raw = state.counters;
  switch (state.game) {
    case Game::sokoban: s.reported = static_cast<double>(state.counters.boxes_on_targets); break;
    case Game::tetris:
      s.reported = static_cast<double>(state.counters.pieces_dropped + state.counters.lines_cleared);
      break;
    case Game::g2048:
      s.reported = state.counters.merged_sum > 0
                       ? 10.0 * std::log2(static_cast<double>(state.counters.merged_sum))
                       : 0.0;
      break;
    case Game::candy: s.reported = static_cast<double>(state.counters.candies_eliminated); break;
  }
  return s;
}

}  // namespace gameharness::env
