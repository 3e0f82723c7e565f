#pragma once

#include "common/json.hpp"
#include "env/environment.hpp"

namespace gameharness::env {

Json to_json(const GameState& state);
GameState state_from_json(const Json& j);

Json to_json(const EnvConfig& config);
// Loads an EnvConfig; Sokoban levels are resolved from level_pack lazily by
// Environment, so the JSON form never embeds level text.
EnvConfig env_config_from_json(const Json& j);

Json to_json(const Score& score);

}  // namespace gameharness::env
