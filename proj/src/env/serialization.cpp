#include "env/serialization.hpp"

#include <string>

#include "common/error.hpp"

namespace gameharness::env {

Json to_json(const GameState& s) {
  Json board = Json::array();
  for (int r = 0; r < s.board.rows; ++r) {
    Json row = Json::array();
    for (int c = 0; c < s.board.cols; ++c) row.push_back(s.board.at(r, c));
    board.push_back(std::move(row));
  }
  Json j;
  j["schema"] = "gameharness.state/1";
  j["game"] = std::string(to_string(s.game));
  j["board"] = std::move(board);
  j["rng"] = std::to_string(s.rng.state());
  j["turn"] = s.turn;
  j["counters"] = {{"boxes_on_targets", s.counters.boxes_on_targets},
                   {"pieces_dropped", s.counters.pieces_dropped},
                   {"lines_cleared", s.counters.lines_cleared},
                   {"merged_sum", s.counters.merged_sum},
                   {"candies_eliminated", s.counters.candies_eliminated}};
  j["stagnation"] = s.stagnation;
  j["moves_used"] = s.moves_used;
  j["level_index"] = s.level_index;
  j["level_initial_on_target"] = s.level_initial_on_target;
  j["level_best"] = s.level_best;
  j["piece"] = s.piece;
  j["bag"] = s.bag;
  j["terminal"] = s.terminal ? Json(std::string(to_string(*s.terminal))) : Json(nullptr);
  return j;
}

GameState state_from_json(const Json& j) {
  try {
    GameState s;
    s.game = parse_game(j.at("game").get<std::string>());
    const auto& board = j.at("board");
    const int rows = static_cast<int>(board.size());
    const int cols = rows ? static_cast<int>(board.at(0).size()) : 0;
    s.board = Grid(rows, cols);
    for (int r = 0; r < rows; ++r) {
      if (static_cast<int>(board.at(r).size()) != cols)
        throw Error(ErrorCode::InvalidConfig, "ragged board in state");
      for (int c = 0; c < cols; ++c) s.board.at(r, c) = board.at(r).at(c).get<int>();
    }
    s.rng.set_state(std::stoull(j.at("rng").get<std::string>()));
    s.turn = j.value("turn", 0);
    if (j.contains("counters")) {
      const auto& c = j.at("counters");
      s.counters.boxes_on_targets = c.value("boxes_on_targets", std::int64_t{0});
      s.counters.pieces_dropped = c.value("pieces_dropped", std::int64_t{0});
      s.counters.lines_cleared = c.value("lines_cleared", std::int64_t{0});
      s.counters.merged_sum = c.value("merged_sum", std::int64_t{0});
      s.counters.candies_eliminated = c.value("candies_eliminated", std::int64_t{0});
    }
    s.stagnation = j.value("stagnation", 0);
    s.moves_used = j.value("moves_used", 0);
    s.level_index = j.value("level_index", 0);
    s.level_initial_on_target = j.value("level_initial_on_target", 0);
    s.level_best = j.value("level_best", 0);
    s.piece = j.value("piece", -1);
    s.bag = j.value("bag", std::vector<int>{});
    if (j.contains("terminal") && !j.at("terminal").is_null())
      s.terminal = parse_termination(j.at("terminal").get<std::string>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed state JSON: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::InvalidConfig, "malformed rng state in state JSON");
  }
}

Json to_json(const EnvConfig& c) {
  Json j;
  j["level_pack"] = c.level_pack;
  j["move_budget"] = c.move_budget;
  j["candy_colors"] = c.candy_colors;
  j["candy_session_moves"] = c.candy_session_moves;
  return j;
}

EnvConfig env_config_from_json(const Json& j) {
  EnvConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "env config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key != "level_pack" && key != "move_budget" && key != "candy_colors" &&
        key != "candy_session_moves")
      throw Error(ErrorCode::InvalidConfig, "unknown env config key: " + key);
    (void)value;
  }
  try {
    c.level_pack = j.value("level_pack", c.level_pack);
    c.move_budget = j.value("move_budget", c.move_budget);
    c.candy_colors = j.value("candy_colors", c.candy_colors);
    c.candy_session_moves = j.value("candy_session_moves", c.candy_session_moves);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad env config: ") + e.what());
  }
  return c;
}

Json to_json(const Score& s) {
  Json raw;
  switch (s.game) {
    case Game::sokoban: raw["boxes_on_targets"] = s.raw.boxes_on_targets; break;
    case Game::tetris:
      raw["pieces_dropped"] = s.raw.pieces_dropped;
      raw["lines_cleared"] = s.raw.lines_cleared;
      break;
    case Game::g2048: raw["merged_sum"] = s.raw.merged_sum; break;
    case Game::candy: raw["candies_eliminated"] = s.raw.candies_eliminated; break;
  }
  return Json{{"game", std::string(to_string(s.game))}, {"raw", raw}, {"reported", s.reported}};
}

}  // namespace gameharness::env
