#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "env/environment.hpp"

namespace gameharness::perception {

enum class Mode { raw_text, structured_text, annotated_image, combined };

inline constexpr Mode kAllModes[] = {Mode::raw_text, Mode::structured_text, Mode::annotated_image,
                                     Mode::combined};

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view name);

bool has_text(Mode mode);
bool has_image(Mode mode);

using Rgb = std::array<std::uint8_t, 3>;

struct RenderStyle {
  int version = 1;
  int cell_px = 32;
  Rgb background{};
  Rgb grid_line{};
  Rgb label{};
  // Game-specific palettes keyed by role ("floor", "tile:8", "piece:2", ...).
  std::map<std::string, Rgb> palette;

  Rgb color(const std::string& key) const;
};

// The bundled style table.
const RenderStyle& default_style();
RenderStyle parse_style(std::string_view json_text);

struct Observation {
  Mode mode = Mode::raw_text;
  env::Game game = env::Game::g2048;
  int turn = 0;
  std::optional<std::string> text;
  std::optional<std::vector<std::uint8_t>> image;  // PNG bytes
};

// structured=false: plain grid dump. structured=true: header plus one
// "<Object> at (row,col)" line per object in row-major order.
std::string render_text(const env::GameState& state, bool structured,
                        const env::EnvConfig& config = {});

// PNG with a label band of one cell along the top and left edges, grid lines
// between cells and per-cell glyphs. Throws Error{UnsupportedSize} when the
// style's cell size is below 16 px.
std::vector<std::uint8_t> render_image(const env::GameState& state, const RenderStyle& style);

Observation observe(const env::GameState& state, Mode mode, const env::EnvConfig& config = {},
                    const RenderStyle& style = default_style());

// Candy color names, indexed by cell value - 1.
std::string_view candy_color_name(int value);

// Minimal PNG writer for 8-bit RGB rasters (filter 0, zlib level 9).
std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<std::uint8_t>& rgb);

}  // namespace gameharness::perception
