#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "env/types.hpp"

namespace gameharness::harness {

inline constexpr std::string_view kHistorySlot = "{Previous Game History}";
inline constexpr std::string_view kBoardSlot = "{Symbolic Board Features}";

enum class Provenance { empirical, optimized };

std::string_view to_string(Provenance p);

// Template file layout:
//
//   id: g2048_empirical_1
//   game: g2048
//   provenance: empirical
//   parent: ...          (optional)
//   step: 3              (optional)
//   === system ===
//   ...
//   === user ===
//   ...
struct PromptTemplate {
  std::string id;
  env::Game game = env::Game::g2048;
  Provenance provenance = Provenance::empirical;
  std::string parent;
  int step = 0;
  std::string system_text;
  std::string user_text;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

// Throws Error{InvalidConfig} on a malformed file.
PromptTemplate parse_template(std::string_view text);
std::string serialize(const PromptTemplate& t);

// Bundled template id ("g2048_empirical_1") or a file path.
PromptTemplate load_template(const std::string& id_or_path);
std::vector<std::string> bundled_template_ids();
std::string default_template_id(env::Game game);

// Throws Error{MissingPlaceholder} unless both slots occur exactly once in
// the user text.
void validate_action_template(const PromptTemplate& t);

// Replaces each `{Name}` key in one left-to-right pass; substituted text is
// never rescanned.
std::string instantiate(std::string_view text, const std::map<std::string, std::string, std::less<>>& values);

}  // namespace gameharness::harness
