#pragma once

// Per-game engines behind Environment. Callers validate game/action tags.

#include <cstdint>
#include <vector>

#include "env/environment.hpp"

namespace gameharness::env::detail {

GameState reset_2048(std::uint64_t seed);
std::vector<Action> legal_2048(const GameState& state);
StepResult step_2048(const GameState& state, Direction d, int budget);

GameState reset_sokoban(const std::vector<SokobanLevel>& levels, std::uint64_t seed);
std::vector<Action> legal_sokoban(const GameState& state);
StepResult step_sokoban(const GameState& state, Direction d, const std::vector<SokobanLevel>& levels,
                        int budget);

GameState reset_tetris(std::uint64_t seed);
std::vector<Action> legal_tetris(const GameState& state);
StepResult step_tetris(const GameState& state, Placement p, int budget);

GameState reset_candy(std::uint64_t seed, int colors);
std::vector<Action> legal_candy(const GameState& state);
StepResult step_candy(const GameState& state, const Swap& swap, int colors, int session_moves);

StepResult finish(GameState next, double reward);

}  // namespace gameharness::env::detail
