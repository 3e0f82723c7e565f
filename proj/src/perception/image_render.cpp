#include <zlib.h>

#include <algorithm>
#include <string>

#include "common/assets.hpp"
#include "common/error.hpp"
#include "common/json.hpp"
#include "perception/perception.hpp"

namespace gameharness::perception {

using env::Game;
using env::GameState;
using env::SokobanCell;

Rgb RenderStyle::color(const std::string& key) const {
  const auto it = palette.find(key);
  if (it == palette.end()) throw Error(ErrorCode::InvalidConfig, "render style lacks color '" + key + "'");
  return it->second;
}

namespace {

Rgb to_rgb(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::InvalidConfig, "color must be [r,g,b]");
  Rgb c{};
  for (std::size_t i = 0; i < 3; ++i) c[i] = static_cast<std::uint8_t>(std::clamp(j[i].get<int>(), 0, 255));
  return c;
}

}  // namespace

RenderStyle parse_style(std::string_view json_text) {
  try {
    const Json j = Json::parse(json_text);
    RenderStyle s;
    s.version = j.at("version").get<int>();
    s.cell_px = j.value("cell_px", 32);
    s.background = to_rgb(j.at("background"));
    s.grid_line = to_rgb(j.at("grid_line"));
    s.label = to_rgb(j.at("label"));
    const auto& games = j.at("games");
    const auto& g2048 = games.at("g2048");
    for (const char* key : {"empty", "text_dark", "text_light"})
      s.palette[std::string("g2048.") + key] = to_rgb(g2048.at(key));
    for (const auto& [value, color] : g2048.at("tiles").items()) s.palette["g2048.tile." + value] = to_rgb(color);
    for (const auto& [key, color] : games.at("sokoban").items()) s.palette["sokoban." + key] = to_rgb(color);
    s.palette["tetris.empty"] = to_rgb(games.at("tetris").at("empty"));
    const auto& pieces = games.at("tetris").at("pieces");
    for (std::size_t i = 0; i < pieces.size(); ++i)
      s.palette["tetris.piece." + std::to_string(i)] = to_rgb(pieces[i]);
    const auto& candies = games.at("candy").at("colors");
    for (std::size_t i = 0; i < candies.size(); ++i)
      s.palette["candy.color." + std::to_string(i + 1)] = to_rgb(candies[i]);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed render style: ") + e.what());
  }
}

const RenderStyle& default_style() {
  static const RenderStyle style = parse_style(*assets::find("style/render_style.json"));
  return style;
}

std::vector<std::uint8_t> encode_png(int width, int height, const std::vector<std::uint8_t>& rgb) {
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(height) * (1 + 3 * static_cast<std::size_t>(width)));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const auto row = rgb.begin() + static_cast<std::ptrdiff_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + width * 3);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
    throw Error(ErrorCode::Io, "zlib compression failed");
  packed.resize(packed_size);

  std::vector<std::uint8_t> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  const auto put32 = [&](std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
  };
  const auto chunk = [&](const char* type, const std::vector<std::uint8_t>& data) {
    put32(static_cast<std::uint32_t>(data.size()));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    put32(static_cast<std::uint32_t>(
        crc32(0, out.data() + start, static_cast<uInt>(out.size() - start))));
  };
  std::vector<std::uint8_t> ihdr;
  for (std::uint32_t v : {static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height)})
    for (int shift = 24; shift >= 0; shift -= 8) ihdr.push_back(static_cast<std::uint8_t>(v >> shift));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, no interlace
  chunk("IHDR", ihdr);
  chunk("IDAT", packed);
  chunk("IEND", {});
  return out;
}

namespace {

// 3x5 digit glyphs, one row per 3 bits (MSB = left column).
constexpr std::uint8_t kDigits[10][5] = {
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
};

class Canvas {
 public:
  Canvas(int w, int h, Rgb fill) : w_(w), h_(h), px_(static_cast<std::size_t>(w * h * 3)) {
    rect(0, 0, w, h, fill);
  }

  void rect(int x, int y, int w, int h, Rgb c) {
    for (int yy = std::max(0, y); yy < std::min(h_, y + h); ++yy)
      for (int xx = std::max(0, x); xx < std::min(w_, x + w); ++xx) {
        auto* p = &px_[static_cast<std::size_t>((yy * w_ + xx) * 3)];
        p[0] = c[0], p[1] = c[1], p[2] = c[2];
      }
  }

  // Draws decimal digits centred in the box (x, y, w, h), scaled to fit.
  void number(const std::string& digits, int x, int y, int w, int h, Rgb c) {
    const int n = static_cast<int>(digits.size());
    int scale = std::max(1, std::min((w - 4) / (4 * n), (h - 4) / 6));
    const int tw = n * 4 * scale - scale, th = 5 * scale;
    const int ox = x + (w - tw) / 2, oy = y + (h - th) / 2;
    for (int i = 0; i < n; ++i) {
      const auto& glyph = kDigits[digits[static_cast<std::size_t>(i)] - '0'];
      for (int gy = 0; gy < 5; ++gy)
        for (int gx = 0; gx < 3; ++gx)
          if (glyph[gy] & (4 >> gx)) rect(ox + (i * 4 + gx) * scale, oy + gy * scale, scale, scale, c);
    }
  }

  int width() const { return w_; }
  int height() const { return h_; }
  const std::vector<std::uint8_t>& pixels() const { return px_; }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

void draw_cell(Canvas& cv, const GameState& s, const RenderStyle& st, int r, int c, int x, int y) {
  const int cell = st.cell_px;
  const int v = s.board.at(r, c);
  const auto inset = [&](int pad, Rgb color) { cv.rect(x + pad, y + pad, cell - 2 * pad, cell - 2 * pad, color); };
  switch (s.game) {
    case Game::g2048: {
      if (v == 0) {
        inset(0, st.color("g2048.empty"));
        break;
      }
      const std::string key = "g2048.tile." + std::to_string(v);
      inset(0, st.palette.count(key) ? st.color(key) : st.color("g2048.tile.other"));
      cv.number(std::to_string(v), x, y, cell, cell,
                v <= 4 ? st.color("g2048.text_dark") : st.color("g2048.text_light"));
      break;
    }
    case Game::sokoban: {
      inset(0, st.color("sokoban.floor"));
      switch (static_cast<SokobanCell>(v)) {
        case SokobanCell::floor: break;
        case SokobanCell::wall: inset(0, st.color("sokoban.wall")); break;
        case SokobanCell::target: inset(cell / 3, st.color("sokoban.target")); break;
        case SokobanCell::box: inset(cell / 6, st.color("sokoban.box")); break;
        case SokobanCell::box_on_target: inset(cell / 6, st.color("sokoban.box_on_target")); break;
        case SokobanCell::player: inset(cell / 4, st.color("sokoban.player")); break;
        case SokobanCell::player_on_target:
          inset(cell / 6, st.color("sokoban.target"));
          inset(cell / 4, st.color("sokoban.player"));
          break;
      }
      break;
    }
    case Game::tetris:
      inset(0, v ? st.color("tetris.piece." + std::to_string(v - 1)) : st.color("tetris.empty"));
      break;
    case Game::candy:
      inset(0, st.background);
      if (v) inset(cell / 8, st.color("candy.color." + std::to_string(v)));
      break;
  }
}

}  // namespace

std::vector<std::uint8_t> render_image(const GameState& state, const RenderStyle& style) {
  const int cell = style.cell_px;
  if (cell < 16)
    throw Error(ErrorCode::UnsupportedSize, "cell size " + std::to_string(cell) + " px is below 16 px");
  const int rows = state.board.rows, cols = state.board.cols;
  Canvas cv((cols + 1) * cell, (rows + 1) * cell, style.background);

  for (int c = 0; c < cols; ++c) cv.number(std::to_string(c), (c + 1) * cell, 0, cell, cell, style.label);
  for (int r = 0; r < rows; ++r) cv.number(std::to_string(r), 0, (r + 1) * cell, cell, cell, style.label);

  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) draw_cell(cv, state, style, r, c, (c + 1) * cell, (r + 1) * cell);

  for (int c = 0; c <= cols; ++c) cv.rect((c + 1) * cell - (c == cols), cell, 1, rows * cell, style.grid_line);
  for (int r = 0; r <= rows; ++r) cv.rect(cell, (r + 1) * cell - (r == rows), cols * cell, 1, style.grid_line);

  return encode_png(cv.width(), cv.height(), cv.pixels());
}

}  // namespace gameharness::perception
