#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "common/assets.hpp"
#include "common/error.hpp"
#include "common/text.hpp"
#include "llm/backend.hpp"

namespace gameharness::llm {

void validate(const PromptMessages& prompt) {
  if (prompt.messages.empty() || prompt.messages.front().role != "system")
    throw Error(ErrorCode::InvalidConfig, "prompt must start with a system message");
  for (std::size_t i = 1; i < prompt.messages.size(); ++i) {
    const auto& m = prompt.messages[i];
    if (m.role == "system") throw Error(ErrorCode::InvalidConfig, "prompt has more than one system message");
    if (m.role != "user") throw Error(ErrorCode::InvalidConfig, "unsupported message role: " + m.role);
  }
}

Json to_json(const GenParams& p) {
  return Json{{"temperature", p.temperature}, {"max_tokens", p.max_tokens}, {"stop", p.stop}};
}

GenParams gen_params_from_json(const Json& j) {
  GenParams p;
  if (j.is_null()) return p;
  try {
    p.temperature = j.value("temperature", p.temperature);
    p.max_tokens = j.value("max_tokens", p.max_tokens);
    p.stop = j.value("stop", p.stop);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad generation parameters: ") + e.what());
  }
  if (p.temperature < 0) throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
  if (p.max_tokens <= 0) throw Error(ErrorCode::InvalidConfig, "max_tokens must be > 0");
  return p;
}

int estimate_tokens(const std::string& text) { return static_cast<int>((text.size() + 3) / 4); }

int estimate_tokens(const PromptMessages& prompt) {
  int n = 0;
  for (const auto& m : prompt.messages) n += estimate_tokens(m.content);
  return n;
}

HealthReport Backend::probe() { return {true, kind(), model(), "offline backend"}; }

// ---- scripted ---------------------------------------------------------------

ScriptedBackend::ScriptedBackend(std::vector<std::string> replies, bool cycle, std::string name)
    : replies_(std::move(replies)), cycle_(cycle), name_(std::move(name)) {
  if (cycle_ && replies_.empty()) throw Error(ErrorCode::InvalidConfig, "cyclic script has no replies");
}

Completion ScriptedBackend::complete(const PromptMessages& prompt, const GenParams&) {
  std::lock_guard lock(mutex_);
  calls_.push_back(prompt);
  if (next_ >= replies_.size()) {
    if (!cycle_)
      throw BackendError(BackendErrorKind::exhausted_script,
                         fmt::format("script '{}' exhausted after {} replies", name_, replies_.size()));
    next_ = 0;
  }
  Completion c;
  c.text = replies_[next_++];
  c.usage = {estimate_tokens(prompt), estimate_tokens(c.text)};
  return c;
}

std::vector<PromptMessages> ScriptedBackend::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::size_t ScriptedBackend::call_count() const {
  std::lock_guard lock(mutex_);
  return calls_.size();
}

// ---- random legal -----------------------------------------------------------

namespace {
constexpr std::string_view kTrailerPrefix = "Legal moves: ";
}

std::string format_legal_trailer(const std::vector<env::Action>& actions) {
  std::vector<std::string> tokens;
  tokens.reserve(actions.size());
  for (const auto& a : actions) tokens.push_back(env::to_token(a));
  return std::string(kTrailerPrefix) + text::join(tokens, " | ");
}

std::vector<std::string> parse_legal_trailer(const std::string& user_text) {
  const auto lines = text::split_lines(user_text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (it->rfind(kTrailerPrefix, 0) != 0) continue;
    std::vector<std::string> out;
    std::string_view rest = std::string_view(*it).substr(kTrailerPrefix.size());
    while (!rest.empty()) {
      const auto bar = rest.find('|');
      const auto token = text::trim(rest.substr(0, bar));
      if (!token.empty()) out.emplace_back(token);
      if (bar == std::string_view::npos) break;
      rest.remove_prefix(bar + 1);
    }
    return out;
  }
  return {};
}

namespace {

std::vector<std::string> legal_from_prompt(const PromptMessages& prompt) {
  for (auto it = prompt.messages.rbegin(); it != prompt.messages.rend(); ++it) {
    if (it->role != "user") continue;
    auto legal = parse_legal_trailer(it->content);
    if (!legal.empty()) return legal;
  }
  return {};
}

}  // namespace

RandomLegalBackend::RandomLegalBackend(std::uint64_t seed) : rng_(seed) {}

Completion RandomLegalBackend::complete(const PromptMessages& prompt, const GenParams&) {
  const auto legal = legal_from_prompt(prompt);
  Completion c;
  if (legal.empty()) {
    c.text = "No legal moves were listed.";
  } else {
    std::lock_guard lock(mutex_);
    c.text = "thought: random choice\nmove: " + legal[rng_.below(legal.size())];
  }
  c.usage = {estimate_tokens(prompt), estimate_tokens(c.text)};
  return c;
}

// ---- 2048 oracle ------------------------------------------------------------

namespace {

struct Slide {
  env::Grid board;
  int gain = 0;
};

Slide slide(const env::Grid& board, env::Direction d) {
  Slide out{board, 0};
  const bool horizontal = d == env::Direction::left || d == env::Direction::right;
  const bool toward_head = d == env::Direction::left || d == env::Direction::up;
  for (int k = 0; k < 4; ++k) {
    std::array<int, 4> line{};
    for (int i = 0; i < 4; ++i) line[i] = horizontal ? board.at(k, i) : board.at(i, k);
    const auto m = env::slide_merge_line(line, toward_head);
    out.gain += m.gain;
    for (int i = 0; i < 4; ++i) (horizontal ? out.board.at(k, i) : out.board.at(i, k)) = m.line[i];
  }
  return out;
}

int best_gain(const env::Grid& board) {
  int best = 0;
  for (auto d : env::kDirections) {
    const auto s = slide(board, d);
    if (s.board != board) best = std::max(best, s.gain);
  }
  return best;
}

int empty_cells(const env::Grid& g) { return static_cast<int>(std::count(g.cells.begin(), g.cells.end(), 0)); }

std::string no_context_reply() { return "No game context available; reflection skipped."; }

}  // namespace

env::Direction expectimax_2048(const env::GameState& state) {
  std::optional<env::Direction> best;
  double best_value = -1.0;
  int best_empty = -1;
  for (auto d : env::kDirections) {
    const auto s = slide(state.board, d);
    if (s.board == state.board) continue;
    double expected = 0.0;
    int cells = 0;
    for (std::size_t i = 0; i < s.board.cells.size(); ++i) {
      if (s.board.cells[i] != 0) continue;
      ++cells;
      env::Grid g = s.board;
      g.cells[i] = 2;
      double v = 0.9 * best_gain(g);
      g.cells[i] = 4;
      v += 0.1 * best_gain(g);
      expected += v;
    }
    const double value = s.gain + (cells ? expected / cells : 0.0);
    const int empty = empty_cells(s.board);
    if (value > best_value || (value == best_value && empty > best_empty)) {
      best = d;
      best_value = value;
      best_empty = empty;
    }
  }
  return best.value_or(env::Direction::up);
}

Completion Oracle2048Backend::complete(const PromptMessages& prompt, const GenParams&) {
  Completion c;
  if (!prompt.context || prompt.context->state.game != env::Game::g2048) {
    c.text = no_context_reply();
  } else {
    const auto d = expectimax_2048(prompt.context->state);
    c.text = fmt::format("thought: expectimax over merge gain\nmove: {}", env::to_string(d));
  }
  c.usage = {estimate_tokens(prompt), estimate_tokens(c.text)};
  return c;
}

// ---- Sokoban oracle ---------------------------------------------------------

namespace {

using env::SokobanCell;

struct Node {
  int player;
  std::vector<int> boxes;  // sorted cell indices
  bool operator<(const Node& o) const { return std::tie(player, boxes) < std::tie(o.player, o.boxes); }
};

}  // namespace

std::optional<std::vector<env::Direction>> solve_sokoban(const env::GameState& state, std::size_t node_limit) {
  const env::Grid& g = state.board;
  const int cols = g.cols;
  std::vector<char> wall(g.cells.size()), target(g.cells.size());
  Node start{-1, {}};
  for (int i = 0; i < static_cast<int>(g.cells.size()); ++i) {
    const auto c = static_cast<SokobanCell>(g.cells[static_cast<std::size_t>(i)]);
    wall[static_cast<std::size_t>(i)] = c == SokobanCell::wall;
    target[static_cast<std::size_t>(i)] =
        c == SokobanCell::target || c == SokobanCell::box_on_target || c == SokobanCell::player_on_target;
    if (c == SokobanCell::box || c == SokobanCell::box_on_target) start.boxes.push_back(i);
    if (c == SokobanCell::player || c == SokobanCell::player_on_target) start.player = i;
  }
  if (start.player < 0) return std::nullopt;

  const auto is_wall = [&](int r, int c) { return !g.in_bounds(r, c) || wall[static_cast<std::size_t>(r * cols + c)]; };
  const auto dead_corner = [&](int idx) {
    if (target[static_cast<std::size_t>(idx)]) return false;
    const int r = idx / cols, c = idx % cols;
    return (is_wall(r - 1, c) || is_wall(r + 1, c)) && (is_wall(r, c - 1) || is_wall(r, c + 1));
  };
  const auto solved = [&](const Node& n) {
    return std::all_of(n.boxes.begin(), n.boxes.end(), [&](int b) { return target[static_cast<std::size_t>(b)] != 0; });
  };
  const int dr[] = {-1, 1, 0, 0}, dc[] = {0, 0, -1, 1};

  std::map<Node, std::pair<Node, int>> parent;
  std::queue<Node> todo;
  todo.push(start);
  parent.emplace(start, std::make_pair(start, -1));
  while (!todo.empty() && parent.size() <= node_limit) {
    Node n = todo.front();
    todo.pop();
    if (solved(n)) {
      std::vector<env::Direction> path;
      for (Node cur = n;;) {
        const auto& [prev, dir] = parent.at(cur);
        if (dir < 0) break;
        path.push_back(env::kDirections[dir]);
        cur = prev;
      }
      std::reverse(path.begin(), path.end());
      return path;
    }
    const int pr = n.player / cols, pc = n.player % cols;
    for (int d = 0; d < 4; ++d) {
      const int tr = pr + dr[d], tc = pc + dc[d];
      if (is_wall(tr, tc)) continue;
      const int t = tr * cols + tc;
      Node next = n;
      next.player = t;
      const auto hit = std::find(next.boxes.begin(), next.boxes.end(), t);
      if (hit != next.boxes.end()) {
        const int br = tr + dr[d], bc = tc + dc[d];
        if (is_wall(br, bc)) continue;
        const int b = br * cols + bc;
        if (std::find(next.boxes.begin(), next.boxes.end(), b) != next.boxes.end()) continue;
        if (dead_corner(b)) continue;
        *hit = b;
        std::sort(next.boxes.begin(), next.boxes.end());
      }
      if (parent.emplace(next, std::make_pair(n, d)).second) todo.push(std::move(next));
    }
  }
  return std::nullopt;
}

Completion OracleSokobanBackend::complete(const PromptMessages& prompt, const GenParams&) {
  Completion c;
  if (!prompt.context || prompt.context->state.game != env::Game::sokoban) {
    c.text = no_context_reply();
  } else if (const auto plan = solve_sokoban(prompt.context->state); plan && !plan->empty()) {
    c.text = fmt::format("thought: breadth-first plan of {} moves\nmove: {}", plan->size(),
                         env::to_string(plan->front()));
  } else {
    const auto legal = legal_from_prompt(prompt);
    c.text = fmt::format("thought: no solution found\nmove: {}", legal.empty() ? "up" : legal.front());
  }
  c.usage = {estimate_tokens(prompt), estimate_tokens(c.text)};
  return c;
}

// ---- construction -----------------------------------------------------------

std::unique_ptr<ScriptedBackend> load_script(const std::string& name_or_path, const std::string& label) {
  std::string text;
  if (auto bundled = assets::find("scripts/" + name_or_path + ".json"))
    text = std::string(*bundled);
  else
    text = text::read_file(name_or_path);
  try {
    const Json j = Json::parse(text);
    return std::make_unique<ScriptedBackend>(j.at("replies").get<std::vector<std::string>>(),
                                             j.value("cycle", false), label);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "malformed script '" + name_or_path + "': " + e.what());
  }
}

Json to_json(const BackendSpec& spec) {
  Json j{{"name", spec.name}, {"kind", spec.kind}};
  if (spec.kind == "scripted") j["script"] = spec.script;
  if (spec.kind == "http") j["http"] = to_json(spec.http);
  return j;
}

BackendSpec backend_spec_from_json(const Json& j) {
  if (j.is_string()) return parse_backend_spec(j.get<std::string>());
  try {
    BackendSpec s;
    s.kind = j.at("kind").get<std::string>();
    s.name = j.value("name", s.kind);
    s.script = j.value("script", std::string());
    if (s.kind == "http") s.http = http_config_from_json(j.at("http"));
    if (s.kind != "scripted" && s.kind != "random_legal" && s.kind != "oracle_2048" &&
        s.kind != "oracle_sokoban" && s.kind != "http")
      throw Error(ErrorCode::InvalidConfig, "unknown backend kind: " + s.kind);
    if (s.kind == "scripted" && s.script.empty())
      throw Error(ErrorCode::InvalidConfig, "scripted backend needs a script");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad backend spec: ") + e.what());
  }
}

BackendSpec parse_backend_spec(const std::string& text) {
  BackendSpec s;
  s.name = text;
  const auto colon = text.find(':');
  s.kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (s.kind == "scripted") {
    if (arg.empty()) throw Error(ErrorCode::InvalidConfig, "use scripted:<script>");
    s.script = arg;
  } else if (s.kind == "http") {
    // http:<model>@<base_url>
    const auto at = arg.find('@');
    if (at == std::string::npos) throw Error(ErrorCode::InvalidConfig, "use http:<model>@<base_url>");
    s.http.model = arg.substr(0, at);
    s.http.base_url = arg.substr(at + 1);
    s.http.api_key_env = "OPENAI_API_KEY";
    s.name = "http:" + s.http.model;
  } else if (s.kind != "random_legal" && s.kind != "oracle_2048" && s.kind != "oracle_sokoban") {
    throw Error(ErrorCode::InvalidConfig, "unknown backend: " + text);
  }
  return s;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::uint64_t seed) {
  if (spec.kind == "scripted") return load_script(spec.script, spec.name);
  if (spec.kind == "random_legal") return std::make_unique<RandomLegalBackend>(seed);
  if (spec.kind == "oracle_2048") return std::make_unique<Oracle2048Backend>();
  if (spec.kind == "oracle_sokoban") return std::make_unique<OracleSokobanBackend>();
  if (spec.kind == "http") return std::make_unique<HttpBackend>(spec.http);
  throw Error(ErrorCode::InvalidConfig, "unknown backend kind: " + spec.kind);
}

}  // namespace gameharness::llm
