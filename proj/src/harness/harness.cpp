#include "harness/harness.hpp"

#include <algorithm>
#include <regex>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/text.hpp"
#include "env/serialization.hpp"

namespace gameharness::harness {

using env::Game;

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::zs: return "zs";
    case Condition::memory: return "memory";
    case Condition::perception: return "perception";
    case Condition::both: return "both";
  }
  return "?";
}

std::string_view display_name(Condition c) {
  switch (c) {
    case Condition::zs: return "ZS";
    case Condition::memory: return "+Memory";
    case Condition::perception: return "+Perception";
    case Condition::both: return "+Both";
  }
  return "?";
}

Condition parse_condition(std::string_view name) {
  const auto n = text::lower(name);
  for (auto c : kAllConditions)
    if (n == to_string(c) || n == text::lower(display_name(c))) return c;
  throw Error(ErrorCode::InvalidConfig, "unknown condition: " + std::string(name));
}

std::string_view to_string(Fallback f) { return f == Fallback::random_legal ? "random_legal" : "forfeit"; }

Fallback parse_fallback(std::string_view name) {
  if (name == "random_legal") return Fallback::random_legal;
  if (name == "forfeit") return Fallback::forfeit;
  throw Error(ErrorCode::InvalidConfig, "unknown fallback: " + std::string(name));
}

HarnessConfig config_for(Condition c, perception::Mode enriched) {
  if (!perception::has_text(enriched) || enriched == perception::Mode::raw_text)
    throw Error(ErrorCode::InvalidConfig, "enriched perception must be structured_text or combined");
  HarnessConfig h;
  const bool perceive = c == Condition::perception || c == Condition::both;
  h.perception = perceive ? enriched : perception::Mode::raw_text;
  h.memory_enabled = c == Condition::memory || c == Condition::both;
  return h;
}

std::optional<Condition> condition_of(const HarnessConfig& h) {
  using perception::Mode;
  if (h.perception == Mode::raw_text) return h.memory_enabled ? Condition::memory : Condition::zs;
  if (h.perception == Mode::structured_text || h.perception == Mode::combined)
    return h.memory_enabled ? Condition::both : Condition::perception;
  return std::nullopt;
}

Json to_json(const HarnessConfig& h) {
  return Json{{"perception", perception::to_string(h.perception)},
              {"memory_enabled", h.memory_enabled},
              {"memory_capacity", h.memory_capacity},
              {"template", h.template_id},
              {"max_parse_retries", h.max_parse_retries},
              {"fallback", to_string(h.fallback)},
              {"gen", llm::to_json(h.gen)}};
}

HarnessConfig harness_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "harness config must be an object");
  static const std::vector<std::string> keys{"perception",        "memory_enabled", "memory_capacity", "template",
                                             "max_parse_retries", "fallback",       "gen"};
  for (const auto& [k, _] : j.items())
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw Error(ErrorCode::InvalidConfig, "unknown harness config key: " + k);
  HarnessConfig h;
  try {
    if (j.contains("perception")) h.perception = perception::parse_mode(j["perception"].get<std::string>());
    h.memory_enabled = j.value("memory_enabled", h.memory_enabled);
    h.memory_capacity = j.value("memory_capacity", h.memory_capacity);
    h.template_id = j.value("template", h.template_id);
    h.max_parse_retries = j.value("max_parse_retries", h.max_parse_retries);
    if (j.contains("fallback")) h.fallback = parse_fallback(j["fallback"].get<std::string>());
    if (j.contains("gen")) h.gen = llm::gen_params_from_json(j["gen"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad harness config: ") + e.what());
  }
  if (h.memory_capacity < 1) throw Error(ErrorCode::InvalidConfig, "memory_capacity must be >= 1");
  if (h.max_parse_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_parse_retries must be >= 0");
  return h;
}

PromptTemplate resolve_template(const HarnessConfig& config, Game game) {
  auto t = load_template(config.template_id.empty() ? default_template_id(game) : config.template_id);
  if (t.game != game)
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("template '{}' targets {}, not {}", t.id, env::to_string(t.game), env::to_string(game)));
  validate_action_template(t);
  return t;
}

// ---- prompts ----------------------------------------------------------------

std::string history_text(const memory::Trajectory& trajectory, const std::optional<memory::Reflection>& reflection,
                         bool memory_enabled) {
  if (!memory_enabled || (trajectory.empty() && !reflection)) return std::string(kNoHistory);
  std::string out = memory::serialize(trajectory);
  if (reflection) {
    if (!out.empty()) out += "\n\n";
    out += "Reflection:\n" + reflection->text;
  }
  return out;
}

llm::PromptMessages build_action_prompt(const PromptTemplate& tmpl, const perception::Observation& observation,
                                        const memory::Trajectory& trajectory,
                                        const std::optional<memory::Reflection>& reflection,
                                        const HarnessConfig& config) {
  validate_action_template(tmpl);
  if (observation.mode != config.perception)
    throw Error(ErrorCode::InvalidConfig, fmt::format("observation mode {} does not match configured {}",
                                                      perception::to_string(observation.mode),
                                                      perception::to_string(config.perception)));
  std::string board = observation.text ? *observation.text : "The board is shown in the attached image.";
  while (!board.empty() && board.back() == '\n') board.pop_back();
  llm::PromptMessages p;
  p.messages.push_back({"system", tmpl.system_text, std::nullopt});
  p.messages.push_back(
      {"user",
       instantiate(tmpl.user_text, {{std::string(kHistorySlot), history_text(trajectory, reflection, config.memory_enabled)},
                                    {std::string(kBoardSlot), board}}),
       observation.image});
  return p;
}

std::string_view move_format(Game game) {
  switch (game) {
    case Game::g2048:
    case Game::sokoban: return "move: up | down | left | right";
    case Game::tetris: return "move: rotation=R column=C";
    case Game::candy: return "move: swap (r1,c1) (r2,c2)";
  }
  return "";
}

namespace {

// Leading markdown decoration: headings, emphasis, quotes, bullets, code.
std::string_view strip_decoration(std::string_view s) {
  s = text::trim(s);
  while (!s.empty() && std::string_view("#*>`-_ \t").find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  return s;
}

// Matches "<key>:" case-insensitively, tolerating emphasis before the colon;
// returns the value after it.
std::optional<std::string_view> key_value(std::string_view line, std::string_view key) {
  if (!text::starts_with_ci(line, key)) return std::nullopt;
  std::string_view rest = line.substr(key.size());
  while (!rest.empty() && (rest.front() == '*' || rest.front() == '_' || rest.front() == ' ')) rest.remove_prefix(1);
  if (rest.empty() || rest.front() != ':') return std::nullopt;
  rest.remove_prefix(1);
  return text::trim(rest);
}

std::string clean_token(std::string_view v) {
  constexpr std::string_view junk = "*_`\"'[]. \t";
  while (!v.empty() && junk.find(v.front()) != std::string_view::npos) v.remove_prefix(1);
  while (!v.empty() && junk.find(v.back()) != std::string_view::npos) v.remove_suffix(1);
  return text::lower(v);
}

[[noreturn]] void invalid(std::string_view token, Game game) {
  throw Error(ErrorCode::InvalidAction,
              fmt::format("'{}' is not a {} move; expected {}", token, env::to_string(game), move_format(game)));
}

env::Action parse_move(const std::string& token, Game game) {
  switch (game) {
    case Game::g2048:
    case Game::sokoban:
      for (auto d : env::kDirections)
        if (token == env::to_string(d)) return env::Action::direction(game, d);
      invalid(token, game);
    case Game::tetris: {
      static const std::regex re(R"(^rotation\s*=\s*(\d+)\s*,?\s*column\s*=\s*(\d+)$)");
      std::smatch m;
      if (!std::regex_match(token, m, re)) invalid(token, game);
      const int rot = std::stoi(m[1]), col = std::stoi(m[2]);
      if (m[1].length() > 2 || m[2].length() > 2 || rot > 3 || col >= env::kTetrisWidth) invalid(token, game);
      return env::Action::placement(rot, col);
    }
    case Game::candy: {
      static const std::regex re(
          R"(^swap\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*(?:,|and|with)?\s*\(\s*(\d+)\s*,\s*(\d+)\s*\)$)");
      std::smatch m;
      if (!std::regex_match(token, m, re)) invalid(token, game);
      for (int i = 1; i <= 4; ++i)
        if (m[i].length() > 2) invalid(token, game);
      const env::Coord a{std::stoi(m[1]), std::stoi(m[2])}, b{std::stoi(m[3]), std::stoi(m[4])};
      const auto inside = [](env::Coord c) { return c.row < env::kCandyRows && c.col < env::kCandyCols; };
      if (!inside(a) || !inside(b) || std::abs(a.row - b.row) + std::abs(a.col - b.col) != 1) invalid(token, game);
      return env::Action::swap(a, b);
    }
  }
  invalid(token, game);
}

}  // namespace

ParsedResponse parse_action_response(std::string_view response, Game game) {
  std::optional<std::string> move;
  std::string thought;
  bool in_thought = false;
  std::vector<std::string> block;
  for (const auto& raw : text::split_lines(response)) {
    if (text::trim(raw).starts_with("```")) continue;
    const auto line = strip_decoration(raw);
    if (auto v = key_value(line, "move")) {
      move = clean_token(*v);
      in_thought = false;
    } else if (auto v = key_value(line, "thought")) {
      block = {std::string(*v)};
      in_thought = true;
    } else if (in_thought) {
      block.emplace_back(text::trim(raw));
    }
    if (!in_thought && !block.empty()) {
      thought = std::string(text::trim(text::join(block, "\n")));
      block.clear();
    }
  }
  if (!block.empty()) thought = std::string(text::trim(text::join(block, "\n")));
  if (!move) throw Error(ErrorCode::NoMoveLine, "response has no 'move:' line");
  return {thought, parse_move(*move, game)};
}

// ---- records ----------------------------------------------------------------

namespace {

Json counters_json(const env::ScoreCounters& c) {
  return Json{{"boxes_on_targets", c.boxes_on_targets}, {"pieces_dropped", c.pieces_dropped},
              {"lines_cleared", c.lines_cleared},       {"merged_sum", c.merged_sum},
              {"candies_eliminated", c.candies_eliminated}};
}

env::ScoreCounters counters_from_json(const Json& j) {
  env::ScoreCounters c;
  c.boxes_on_targets = j.value("boxes_on_targets", std::int64_t{0});
  c.pieces_dropped = j.value("pieces_dropped", std::int64_t{0});
  c.lines_cleared = j.value("lines_cleared", std::int64_t{0});
  c.merged_sum = j.value("merged_sum", std::int64_t{0});
  c.candies_eliminated = j.value("candies_eliminated", std::int64_t{0});
  return c;
}

}  // namespace

Json to_json(const EpisodeRecord& r) {
  Json turns = Json::array();
  for (const auto& t : r.turns) {
    Json j{{"turn", t.turn},
           {"observation_hash", t.observation_hash},
           {"prompt_tokens", t.prompt_tokens},
           {"completion_tokens", t.completion_tokens},
           {"responses", t.responses},
           {"thought", t.thought},
           {"action", t.action},
           {"fallback", t.fallback}};
    j["reflection"] = t.reflection ? Json(*t.reflection) : Json(nullptr);
    j["reward"] = t.reward;
    j["score_after"] = t.score_after;
    j["latency_ms"] = t.latency_ms;
    j["counters"] = counters_json(t.counters);
    turns.push_back(std::move(j));
  }
  return Json{{"schema", kEpisodeSchema},
              {"id", r.id},
              {"game", env::to_string(r.game)},
              {"model", r.model},
              {"condition", r.condition ? Json(to_string(*r.condition)) : Json(nullptr)},
              {"seed", std::to_string(r.seed)},
              {"turn_budget", r.turn_budget},
              {"template", r.template_id},
              {"harness", to_json(r.harness)},
              {"env", env::to_json(r.env)},
              {"turns", std::move(turns)},
              {"final_score", {{"reported", r.final_score.reported}, {"raw", counters_json(r.final_score.raw)}}},
              {"termination", r.termination}};
}

EpisodeRecord episode_from_json(const Json& j) {
  EpisodeRecord r;
  try {
    if (j.at("schema").get<std::string>() != kEpisodeSchema)
      throw Error(ErrorCode::InvalidConfig, "unsupported episode schema: " + j["schema"].get<std::string>());
    r.id = j.at("id").get<std::string>();
    r.game = env::parse_game(j.at("game").get<std::string>());
    r.model = j.at("model").get<std::string>();
    if (!j.at("condition").is_null()) r.condition = parse_condition(j["condition"].get<std::string>());
    r.seed = std::stoull(j.at("seed").get<std::string>());
    r.turn_budget = j.value("turn_budget", 0);
    r.template_id = j.value("template", std::string());
    r.harness = harness_config_from_json(j.at("harness"));
    r.env = env::env_config_from_json(j.at("env"));
    for (const auto& t : j.at("turns")) {
      TurnRecord tr;
      tr.turn = t.at("turn").get<int>();
      tr.observation_hash = t.value("observation_hash", std::string());
      tr.prompt_tokens = t.value("prompt_tokens", 0);
      tr.completion_tokens = t.value("completion_tokens", 0);
      tr.responses = t.value("responses", std::vector<std::string>{});
      tr.thought = t.value("thought", std::string());
      tr.action = t.at("action").get<std::string>();
      tr.fallback = t.value("fallback", false);
      if (t.contains("reflection") && !t["reflection"].is_null()) tr.reflection = t["reflection"].get<std::string>();
      tr.reward = t.at("reward").get<double>();
      tr.score_after = t.at("score_after").get<double>();
      tr.latency_ms = t.value("latency_ms", 0.0);
      if (t.contains("counters")) tr.counters = counters_from_json(t["counters"]);
      r.turns.push_back(std::move(tr));
    }
    const auto& fs = j.at("final_score");
    r.final_score.game = r.game;
    r.final_score.reported = fs.at("reported").get<double>();
    if (fs.contains("raw")) r.final_score.raw = counters_from_json(fs["raw"]);
    r.termination = j.at("termination").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed episode record: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed episode record: ") + e.what());
  }
  return r;
}

std::string to_jsonl(const EpisodeRecord& record) { return to_json(record).dump() + "\n"; }

// ---- control loop -----------------------------------------------------------

namespace {

std::string observation_hash(const perception::Observation& o) {
  std::uint64_t h = text::fnv1a(o.text.value_or(""));
  if (o.image) h = text::fnv1a(std::string_view(reinterpret_cast<const char*>(o.image->data()), o.image->size()), h);
  return text::hex64(h);
}

std::string corrective_message(const std::string& reason, Game game) {
  return fmt::format(
      "Your previous reply could not be used: {}\n"
      "Reply again using exactly these two lines:\nthought: [your analysis]\n{}",
      reason, move_format(game));
}

constexpr std::uint64_t kFallbackStream = 0xFA11BACCULL;

}  // namespace

Decision decide(const env::GameState& state, AgentContext& ctx) {
  if (state.terminal) throw Error(ErrorCode::TerminalState, "cannot decide in a terminal state");
  const Game game = ctx.environment.game();
  const HarnessConfig& cfg = ctx.config;
  if (cfg.memory_enabled && !ctx.buffer) throw Error(ErrorCode::InvalidConfig, "memory enabled without a buffer");

  Decision d;
  TurnRecord& log = d.log;
  log.turn = state.turn;
  const auto obs = perception::observe(state, cfg.perception, ctx.environment.config());
  log.observation_hash = observation_hash(obs);

  std::optional<memory::Reflection> reflection;
  memory::Trajectory trajectory;
  if (cfg.memory_enabled) {
    if (!ctx.buffer->empty()) {
      llm::Backend& rb = ctx.reflection_backend ? *ctx.reflection_backend : ctx.backend;
      const auto r = memory::reflect(*ctx.buffer, game, rb, cfg.gen, state.turn);
      log.reflection = r.text;
    }
    reflection = ctx.buffer->last_reflection();
    trajectory = ctx.buffer->window(state.turn);
  }

  auto prompt = build_action_prompt(ctx.tmpl, obs, trajectory, reflection, cfg);
  const auto legal = ctx.environment.legal_actions(state);
  // Offline stand-ins cannot read the board, so they get the move list.
  if (ctx.backend.offline()) prompt.user().content += "\n\n" + llm::format_legal_trailer(legal);
  prompt.context = std::make_shared<llm::OracleContext>(llm::OracleContext{state, ctx.environment.config()});

  for (int attempt = 0; attempt <= cfg.max_parse_retries; ++attempt) {
    const auto c = ctx.backend.complete(prompt, cfg.gen);
    log.responses.push_back(c.text);
    log.prompt_tokens += c.usage.prompt_tokens;
    log.completion_tokens += c.usage.completion_tokens;
    log.latency_ms += c.latency_ms;
    std::string reason;
    try {
      auto parsed = parse_action_response(c.text, game);
      if (std::find(legal.begin(), legal.end(), parsed.action) != legal.end()) {
        log.thought = std::move(parsed.thought);
        log.action = env::to_token(parsed.action);
        d.action = parsed.action;
        return d;
      }
      reason = fmt::format("the move '{}' is not legal in the current position.", env::to_token(parsed.action));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoMoveLine && e.code() != ErrorCode::InvalidAction) throw;
      reason = e.what();
    }
    if (attempt < cfg.max_parse_retries) prompt.messages.push_back({"user", corrective_message(reason, game), std::nullopt});
  }

  if (cfg.fallback == Fallback::forfeit || legal.empty() || !ctx.rng)
    throw Error(ErrorCode::Forfeit, fmt::format("no usable move after {} attempts", cfg.max_parse_retries + 1));
  d.action = legal[ctx.rng->below(legal.size())];
  log.action = env::to_token(d.action);
  log.fallback = true;
  return d;
}

EpisodeRecord run_episode(Game game, const env::EnvConfig& env_config, const HarnessConfig& config,
                          llm::Backend& backend, std::uint64_t seed, int turn_budget, const std::string& record_id) {
  return run_episode(game, env_config, config, resolve_template(config, game), backend, seed, turn_budget, record_id);
}

EpisodeRecord run_episode(Game game, const env::EnvConfig& env_config, const HarnessConfig& config,
                          const PromptTemplate& tmpl, llm::Backend& backend, std::uint64_t seed, int turn_budget,
                          const std::string& record_id) {
  if (turn_budget < 0) throw Error(ErrorCode::InvalidConfig, "turn budget must be >= 0");
  if (tmpl.game != game)
    throw Error(ErrorCode::InvalidConfig,
                fmt::format("template '{}' targets {}, not {}", tmpl.id, env::to_string(tmpl.game), env::to_string(game)));
  validate_action_template(tmpl);
  const env::Environment environment(game, env_config);
  memory::MemoryBuffer buffer(config.memory_capacity);
  Rng rng(derive_seed(seed, kFallbackStream));

  EpisodeRecord rec;
  rec.game = game;
  rec.model = backend.model();
  rec.condition = condition_of(config);
  rec.harness = config;
  rec.env = env_config;
  rec.template_id = tmpl.id;
  rec.seed = seed;
  rec.turn_budget = turn_budget;
  rec.id = record_id.empty()
               ? fmt::format("{}-{}-{}-{}", env::to_string(game), rec.condition ? to_string(*rec.condition) : "custom",
                             backend.model(), seed)
               : record_id;

  AgentContext ctx{environment, config, tmpl, backend, nullptr, config.memory_enabled ? &buffer : nullptr, &rng};
  auto state = environment.reset(seed);
  bool forfeited = false;
  while (!state.terminal && (turn_budget == 0 || static_cast<int>(rec.turns.size()) < turn_budget)) {
    Decision d;
    try {
      d = decide(state, ctx);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Forfeit) throw;
      forfeited = true;
      break;
    }
    const auto result = environment.step(state, d.action);
    d.log.reward = result.reward;
    d.log.score_after = env::reported_score(result.next_state).reported;
    d.log.counters = result.next_state.counters;
    if (config.memory_enabled)
      buffer.push({state.turn, perception::render_text(state, false, environment.config()), d.action, result.reward,
                   d.log.score_after});
    rec.turns.push_back(std::move(d.log));
    state = result.next_state;
  }
  rec.final_score = env::reported_score(state);
  rec.termination = state.terminal ? std::string(env::to_string(*state.terminal))
                                   : (forfeited ? "forfeit" : "turn_budget");
  return rec;
}

}  // namespace gameharness::harness
