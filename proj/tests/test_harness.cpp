#include <doctest.h>

#include <cstdlib>

#include "common/error.hpp"
#include "common/text.hpp"
#include "env/serialization.hpp"
#include "harness/harness.hpp"

using namespace gameharness;
using namespace gameharness::harness;
using env::Game;

namespace {

std::string golden(const std::string& name, const std::string& actual) {
  const std::string path = std::string(GOLDEN_DIR) + "/" + name;
  if (std::getenv("GH_UPDATE_GOLDEN")) text::write_file(path, actual);
  return text::read_file(path);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Usage;
}

// Replays a record's actions through a fresh environment and checks each was
// legal in its pre-state.
void check_replay(const EpisodeRecord& rec, const env::EnvConfig& cfg) {
  env::Environment e(rec.game, cfg);
  auto s = e.reset(rec.seed);
  for (const auto& t : rec.turns) {
    const auto legal = e.legal_actions(s);
    const auto it = std::find_if(legal.begin(), legal.end(), [&](const env::Action& a) { return env::to_token(a) == t.action; });
    REQUIRE(it != legal.end());
    s = e.step(s, *it).next_state;
  }
  CHECK(env::reported_score(s).reported == rec.final_score.reported);
}

}  // namespace

TEST_CASE("conditions map to harness configs") {
  CHECK(condition_of(config_for(Condition::zs)) == Condition::zs);
  CHECK(config_for(Condition::zs).perception == perception::Mode::raw_text);
  CHECK_FALSE(config_for(Condition::perception).memory_enabled);
  CHECK(config_for(Condition::both, perception::Mode::combined).perception == perception::Mode::combined);
  for (auto c : kAllConditions) {
    CHECK(condition_of(config_for(c)) == c);
    CHECK(parse_condition(display_name(c)) == c);
  }
  CHECK_THROWS_AS(config_for(Condition::both, perception::Mode::annotated_image), Error);
  const auto h = config_for(Condition::both);
  CHECK(to_json(harness_config_from_json(to_json(h))) == to_json(h));
  CHECK_THROWS_AS(harness_config_from_json(Json{{"memory", true}}), Error);
}

TEST_CASE("zero-shot 2048 prompt matches golden") {
  const auto s = env::reset(Game::g2048, {}, 3);
  const auto cfg = config_for(Condition::zs);
  const auto tmpl = resolve_template(cfg, Game::g2048);
  const auto p = build_action_prompt(tmpl, perception::observe(s, cfg.perception), {}, std::nullopt, cfg);
  CHECK(p.system().content == tmpl.system_text);
  CHECK(p.user().content.find("Previous Game History:\nNone.") != std::string::npos);
  CHECK(p.user().content.find(perception::render_text(s, false)) != std::string::npos);
  CHECK_FALSE(p.user().image);
  CHECK(p.user().content == golden("g2048_prompt_zs.txt", p.user().content));
}

TEST_CASE("memory prompt places the reflection after the trajectory") {
  const auto s = env::reset(Game::g2048, {}, 3);
  const auto cfg = config_for(Condition::both);
  const auto tmpl = resolve_template(cfg, Game::g2048);
  memory::Trajectory traj{{0, "0 2\n", env::Action::direction(Game::g2048, env::Direction::left), 4, 4}};
  const auto p = build_action_prompt(tmpl, perception::observe(s, cfg.perception), traj,
                                     memory::Reflection{"R1", 1, "m"}, cfg);
  const auto& u = p.user().content;
  CHECK(u.find("Turn 0: move=left") < u.find("Reflection:\nR1"));
  CHECK(u.find("Game: 2048") != std::string::npos);
  CHECK(history_text({}, std::nullopt, true) == "None.");
  CHECK(history_text(traj, memory::Reflection{"R1", 1, "m"}, false) == "None.");
}

TEST_CASE("prompt attaches images and checks placeholders") {
  const auto s = env::reset(Game::sokoban, {"tiny"}, 0);
  HarnessConfig cfg = config_for(Condition::perception, perception::Mode::combined);
  auto tmpl = resolve_template(cfg, Game::sokoban);
  const auto obs = perception::observe(s, cfg.perception, {"tiny"});
  const auto p = build_action_prompt(tmpl, obs, {}, std::nullopt, cfg);
  REQUIRE(p.user().image);
  CHECK(*p.user().image == *obs.image);
  tmpl.user_text = text::replace_all(tmpl.user_text, std::string(kBoardSlot), "");
  CHECK(code_of([&] { build_action_prompt(tmpl, obs, {}, std::nullopt, cfg); }) == ErrorCode::MissingPlaceholder);
  CHECK_THROWS_AS(build_action_prompt(resolve_template(cfg, Game::sokoban), perception::observe(s, perception::Mode::raw_text),
                                      {}, std::nullopt, cfg),
                  Error);
}

TEST_CASE("parse_action_response examples") {
  auto r = parse_action_response("thought: keep corner\nmove: left", Game::g2048);
  CHECK(r.thought == "keep corner");
  CHECK(r.action == env::Action::direction(Game::g2048, env::Direction::left));
  r = parse_action_response("Move: UP", Game::g2048);
  CHECK(r.thought.empty());
  CHECK(r.action == env::Action::direction(Game::g2048, env::Direction::up));
  CHECK(code_of([] { parse_action_response("move: banana", Game::g2048); }) == ErrorCode::InvalidAction);
  CHECK(code_of([] { parse_action_response("I would go left.", Game::g2048); }) == ErrorCode::NoMoveLine);
  CHECK(code_of([] { parse_action_response("", Game::sokoban); }) == ErrorCode::NoMoveLine);
}

TEST_CASE("parse tolerates markdown and takes the last move") {
  const auto r = parse_action_response(
      "```\n## Thought: first idea\nspans two lines\n**Move:** `down`\n```\nthought: revised\n- move: \"Right\".", Game::sokoban);
  CHECK(r.thought == "revised");
  CHECK(r.action == env::Action::direction(Game::sokoban, env::Direction::right));
  const auto multi = parse_action_response("thought: a\nb\nmove: up", Game::g2048);
  CHECK(multi.thought == "a\nb");
}

TEST_CASE("tetris and candy grammars") {
  CHECK(parse_action_response("move: rotation=1 column=3", Game::tetris).action == env::Action::placement(1, 3));
  CHECK(parse_action_response("MOVE: Rotation = 2, Column = 0", Game::tetris).action == env::Action::placement(2, 0));
  CHECK(code_of([] { parse_action_response("move: rotation=4 column=0", Game::tetris); }) == ErrorCode::InvalidAction);
  CHECK(code_of([] { parse_action_response("move: rotation=0 column=10", Game::tetris); }) == ErrorCode::InvalidAction);
  CHECK(code_of([] { parse_action_response("move: left", Game::tetris); }) == ErrorCode::InvalidAction);
  CHECK(parse_action_response("move: swap (2,3) (2,4)", Game::candy).action == env::Action::swap({2, 3}, {2, 4}));
  CHECK(parse_action_response("move: Swap(0, 0) and (1, 0)", Game::candy).action == env::Action::swap({0, 0}, {1, 0}));
  CHECK(code_of([] { parse_action_response("move: swap (0,0) (1,1)", Game::candy); }) == ErrorCode::InvalidAction);
  CHECK(code_of([] { parse_action_response("move: swap (7,7) (8,7)", Game::candy); }) == ErrorCode::InvalidAction);
}

TEST_CASE("every legal action survives parse-then-rebuild") {
  for (auto g : env::kAllGames) {
    env::EnvConfig cfg{"tiny"};
    env::Environment e(g, cfg);
    const auto s = e.reset(1);
    const auto legal = e.legal_actions(s);
    REQUIRE_FALSE(legal.empty());
    for (const auto& a : legal) {
      const auto parsed = parse_action_response("thought: x\nmove: " + env::to_token(a), g);
      CHECK(parsed.action == a);
      CHECK(env::to_token(parsed.action) == env::to_token(a));
    }
  }
}

TEST_CASE("decide passes scripted moves through") {
  const env::Environment e(Game::g2048, {});
  const auto s = e.reset(3);
  const auto cfg = config_for(Condition::zs);
  const auto tmpl = resolve_template(cfg, Game::g2048);
  const auto legal = e.legal_actions(s);
  const auto token = env::to_token(legal.front());
  llm::ScriptedBackend backend({"thought: t\nmove: " + token});
  AgentContext ctx{e, cfg, tmpl, backend};
  const auto d = decide(s, ctx);
  CHECK(d.action == legal.front());
  CHECK(d.log.action == token);
  CHECK_FALSE(d.log.fallback);
  const auto calls = backend.calls();
  REQUIRE(calls.size() == 1);
  CHECK(calls[0].context);
  CHECK(llm::parse_legal_trailer(calls[0].user().content).size() == legal.size());
}

TEST_CASE("decide retries with a corrective message then falls back") {
  const env::Environment e(Game::tetris, {});
  const auto s = e.reset(5);
  auto cfg = config_for(Condition::zs);
  const auto tmpl = resolve_template(cfg, Game::tetris);
  Rng rng(11);
  llm::ScriptedBackend garbage({"no idea", "move: rotation=0 column=9", "move: banana"});
  AgentContext ctx{e, cfg, tmpl, garbage, nullptr, nullptr, &rng};
  const auto d = decide(s, ctx);
  CHECK(d.log.fallback);
  CHECK(d.log.responses.size() == 3);
  const auto legal = e.legal_actions(s);
  CHECK(std::find(legal.begin(), legal.end(), d.action) != legal.end());
  const auto calls = garbage.calls();
  CHECK(calls[0].messages.size() == 2);
  CHECK(calls[2].messages.size() == 4);
  CHECK(calls[1].messages.back().content.find("move: rotation=R column=C") != std::string::npos);
  CHECK(calls[2].messages.back().content.find("not legal") != std::string::npos);

  cfg.fallback = Fallback::forfeit;
  llm::ScriptedBackend again({"x", "y", "z"});
  AgentContext forfeit{e, cfg, tmpl, again, nullptr, nullptr, &rng};
  CHECK(code_of([&] { decide(s, forfeit); }) == ErrorCode::Forfeit);
}

TEST_CASE("memory off issues no reflection calls") {
  const auto spec = llm::parse_backend_spec("scripted:demo");
  auto backend = llm::make_backend(spec, 0);
  auto* scripted = dynamic_cast<llm::ScriptedBackend*>(backend.get());
  const auto rec = run_episode(Game::g2048, {}, config_for(Condition::perception), *backend, 7, 20);
  CHECK(scripted->call_count() == rec.turns.size());
  for (const auto& call : scripted->calls()) {
    CHECK(call.user().content.find("Previous Game History:\nNone.") != std::string::npos);
    CHECK(call.user().content.find("Turn 0:") == std::string::npos);
  }
  for (const auto& t : rec.turns) CHECK_FALSE(t.reflection);
}

TEST_CASE("memory on reflects once per turn after the first") {
  llm::ScriptedBackend backend({"move: up", "R", "move: left", "R", "move: down", "R", "move: right"}, true);
  const auto rec = run_episode(Game::g2048, {}, config_for(Condition::memory), backend, 7, 4);
  REQUIRE(rec.turns.size() == 4);
  CHECK(backend.call_count() == 4 + 3);
  CHECK_FALSE(rec.turns[0].reflection);
  CHECK(rec.turns[1].reflection == "R");
  const auto calls = backend.calls();
  CHECK(calls[1].user().content.find("Keep your reflection under 100 words") != std::string::npos);
  CHECK(calls[2].user().content.find("Turn 0: move=up") != std::string::npos);
  CHECK(calls[2].user().content.find("Reflection:\nR") != std::string::npos);
}

TEST_CASE("2048 scripted episode is deterministic") {
  const auto run = [] {
    auto backend = llm::make_backend(llm::parse_backend_spec("scripted:demo"), 0);
    return to_jsonl(run_episode(Game::g2048, {}, config_for(Condition::both), *backend, 7, 50));
  };
  const auto a = run();
  CHECK(a == run());
  const auto rec = episode_from_json(Json::parse(a));
  CHECK(rec.turns.size() > 0);
  CHECK(to_jsonl(rec) == a);
  check_replay(rec, {});
  for (std::size_t i = 0; i < rec.turns.size(); ++i) CHECK(rec.turns[i].turn == static_cast<int>(i));
}

TEST_CASE("random tetris budget score") {
  llm::RandomLegalBackend backend(3);
  const auto rec = run_episode(Game::tetris, {}, config_for(Condition::zs), backend, 9, 10);
  REQUIRE(rec.turns.size() == 10);
  CHECK(rec.termination == "turn_budget");
  CHECK(rec.final_score.reported == 10 + rec.turns.back().counters.lines_cleared);
  for (const auto& t : rec.turns) CHECK_FALSE(t.fallback);
  check_replay(rec, {});
}

TEST_CASE("forfeit on the first turn") {
  llm::ScriptedBackend backend({"?"}, true);
  auto cfg = config_for(Condition::zs);
  cfg.fallback = Fallback::forfeit;
  const auto rec = run_episode(Game::candy, {}, cfg, backend, 1, 0);
  CHECK(rec.turns.empty());
  CHECK(rec.termination == "forfeit");
  CHECK(rec.final_score.reported == 0);
}

TEST_CASE("sokoban oracle wins every tiny level through the harness") {
  for (const auto& level : env::load_level_pack("tiny")) {
    env::EnvConfig cfg;
    cfg.levels = {level};
    llm::OracleSokobanBackend oracle;
    const auto rec = run_episode(Game::sokoban, cfg, config_for(Condition::both), oracle, 0, 0);
    CHECK_MESSAGE(rec.termination == "won", level.id);
    for (const auto& t : rec.turns) CHECK_FALSE(t.fallback);
  }
}

TEST_CASE("episode records reject other schemas") {
  auto backend = llm::RandomLegalBackend(1);
  auto j = to_json(run_episode(Game::candy, {}, config_for(Condition::zs), backend, 2, 3));
  j["schema"] = "other/9";
  CHECK_THROWS_AS(episode_from_json(j), Error);
  CHECK_THROWS_AS(episode_from_json(Json::object()), Error);
}
