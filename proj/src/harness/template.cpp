#include "harness/template.hpp"

#include <fmt/format.h>

#include "common/assets.hpp"
#include "common/error.hpp"
#include "common/text.hpp"

namespace gameharness::harness {

std::string_view to_string(Provenance p) { return p == Provenance::empirical ? "empirical" : "optimized"; }

namespace {

constexpr std::string_view kSystemMarker = "=== system ===";
constexpr std::string_view kUserMarker = "=== user ===";

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, "malformed prompt template: " + why);
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

PromptTemplate parse_template(std::string_view text) {
  const auto sys = text.find(kSystemMarker);
  const auto usr = text.find(kUserMarker);
  if (sys == std::string_view::npos || usr == std::string_view::npos || usr < sys)
    malformed("expected '=== system ===' followed by '=== user ==='");

  PromptTemplate t;
  bool have_id = false, have_game = false;
  for (const auto& raw : text::split_lines(text.substr(0, sys))) {
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) malformed("header line without ':': " + std::string(line));
    const auto key = text::trim(line.substr(0, colon));
    const std::string value(text::trim(line.substr(colon + 1)));
    if (key == "id") {
      t.id = value;
      have_id = !value.empty();
    } else if (key == "game") {
      t.game = env::parse_game(value);
      have_game = true;
    } else if (key == "provenance") {
      if (value == "empirical") t.provenance = Provenance::empirical;
      else if (value == "optimized") t.provenance = Provenance::optimized;
      else malformed("unknown provenance: " + value);
    } else if (key == "parent") {
      t.parent = value;
    } else if (key == "step") {
      try {
        t.step = std::stoi(value);
      } catch (const std::exception&) {
        malformed("step is not an integer: " + value);
      }
    } else {
      malformed("unknown header key: " + std::string(key));
    }
  }
  if (!have_id) malformed("missing id");
  if (!have_game) malformed("missing game");

  auto body = [&](std::size_t from, std::size_t to) {
    std::string_view s = text.substr(from, to - from);
    if (!s.empty() && s.front() == '\n') s.remove_prefix(1);
    return strip_trailing_newlines(std::string(s));
  };
  t.system_text = body(sys + kSystemMarker.size(), usr);
  t.user_text = body(usr + kUserMarker.size(), text.size());
  return t;
}

std::string serialize(const PromptTemplate& t) {
  std::string out = fmt::format("id: {}\ngame: {}\nprovenance: {}\n", t.id, env::to_string(t.game),
                                to_string(t.provenance));
  if (!t.parent.empty()) out += fmt::format("parent: {}\n", t.parent);
  if (t.step) out += fmt::format("step: {}\n", t.step);
  out += fmt::format("{}\n{}\n{}\n{}\n", kSystemMarker, t.system_text, kUserMarker, t.user_text);
  return out;
}

PromptTemplate load_template(const std::string& id_or_path) {
  if (auto bundled = assets::find("templates/" + id_or_path + ".txt")) return parse_template(*bundled);
  return parse_template(text::read_file(id_or_path));
}

std::vector<std::string> bundled_template_ids() {
  std::vector<std::string> ids;
  for (auto name : assets::list("templates/")) {
    name.remove_prefix(std::string_view("templates/").size());
    if (name.ends_with(".txt")) name.remove_suffix(4);
    ids.emplace_back(name);
  }
  return ids;
}

std::string default_template_id(env::Game game) {
  switch (game) {
    case env::Game::g2048: return "g2048_empirical_1";
    case env::Game::sokoban: return "sokoban_default";
    case env::Game::tetris: return "tetris_default";
    case env::Game::candy: return "candy_default";
  }
  return "";
}

void validate_action_template(const PromptTemplate& t) {
  for (auto slot : {kHistorySlot, kBoardSlot}) {
    const auto n = text::count_occurrences(t.user_text, slot);
    if (n != 1)
      throw Error(ErrorCode::MissingPlaceholder,
                  fmt::format("template '{}' must contain {} exactly once in the user text (found {})", t.id,
                              slot, n));
  }
}

std::string instantiate(std::string_view text, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find('{', i);
    if (open == std::string_view::npos) break;
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) break;
    const auto hit = values.find(text.substr(open, close - open + 1));
    if (hit == values.end()) {
      out.append(text.substr(i, open + 1 - i));
      i = open + 1;
      continue;
    }
    out.append(text.substr(i, open - i));
    out += hit->second;
    i = close + 1;
  }
  out.append(text.substr(i));
  return out;
}

}  // namespace gameharness::harness
