#include <doctest.h>

#include "common/error.hpp"
#include "common/text.hpp"
#include "harness/template.hpp"
#include "memory/memory.hpp"

using namespace gameharness;
using namespace gameharness::memory;

namespace {

Transition tr(int turn, env::Direction d = env::Direction::up, double reward = 0) {
  return {turn, "board " + std::to_string(turn) + "\n", env::Action::direction(env::Game::g2048, d), reward,
          reward * 2};
}

std::vector<int> turns(const Trajectory& t) {
  std::vector<int> out;
  for (const auto& x : t) out.push_back(x.turn);
  return out;
}

}  // namespace

TEST_CASE("push evicts FIFO") {
  MemoryBuffer b(3);
  for (int t = 1; t <= 4; ++t) b.push(tr(t));
  CHECK(turns(b.entries()) == std::vector<int>{2, 3, 4});
  MemoryBuffer e(3);
  e.push(tr(1));
  CHECK(e.size() == 1);
}

TEST_CASE("push rejects non-increasing turns") {
  MemoryBuffer b;
  b.push(tr(3));
  CHECK_THROWS_WITH_AS(b.push(tr(3)), doctest::Contains("turn 3"), Error);
  try {
    b.push(tr(1));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonMonotonicTurn);
  }
  auto bad = tr(9);
  bad.reward = std::nan("");
  CHECK_THROWS_AS(b.push(bad), Error);
}

TEST_CASE("window returns recent transitions before the turn") {
  MemoryBuffer b(5);
  CHECK(b.window(0).empty());
  b.push(tr(0));
  b.push(tr(1));
  CHECK(turns(b.window(2)) == std::vector<int>{0, 1});
  CHECK(turns(b.window(1)) == std::vector<int>{0});
  MemoryBuffer big(5);
  for (int t = 0; t < 9; ++t) big.push(tr(t));
  CHECK(turns(big.window(9)) == std::vector<int>{4, 5, 6, 7, 8});
  CHECK(turns(big.window(8)) == std::vector<int>{4, 5, 6, 7});
}

TEST_CASE("transition serialization") {
  CHECK(serialize(tr(2, env::Direction::left, 4)) == "Turn 2: move=left reward=4 score_after=8\nboard 2\n");
  const Trajectory t{tr(0), tr(1)};
  CHECK(serialize(t) == "Turn 0: move=up reward=0 score_after=0\nboard 0\n\nTurn 1: move=up reward=0 score_after=0\nboard 1");
}

TEST_CASE("reflection request for 2048") {
  MemoryBuffer b;
  CHECK_THROWS_AS(build_reflection_request(b, env::Game::g2048), Error);
  b.push(tr(0, env::Direction::left, 4));
  b.push(tr(1, env::Direction::down, 8));
  const auto p = build_reflection_request(b, env::Game::g2048);
  REQUIRE(p.messages.size() == 2);
  CHECK(p.system().role == "system");
  const auto& user = p.user().content;
  CHECK(user.find("Keep your reflection under 100 words") != std::string::npos);
  CHECK(text::count_occurrences(user, "Turn 0: move=left") == 1);
  CHECK(text::count_occurrences(user, "Turn 1: move=down") == 1);
  CHECK(user.find("Turn 0") < user.find("Turn 1"));
  for (auto bullet : {"1. ", "2. ", "3. ", "4. "}) CHECK(user.find(bullet) != std::string::npos);
  CHECK(user.find(harness::kHistorySlot) == std::string::npos);
}

TEST_CASE("reflection request names other games") {
  MemoryBuffer b;
  b.push({0, "#@$.#", env::Action::direction(env::Game::sokoban, env::Direction::right), 1, 1});
  const auto p = build_reflection_request(b, env::Game::sokoban);
  CHECK(p.system().content.find("Sokoban") != std::string::npos);
  CHECK(p.system().content.find("2048") == std::string::npos);
  CHECK(p.user().content.find("2048") == std::string::npos);
}

TEST_CASE("reflect stores the reply verbatim") {
  MemoryBuffer b;
  b.push(tr(0));
  llm::ScriptedBackend backend({"R1", "R2", ""});
  const auto r1 = reflect(b, env::Game::g2048, backend, {}, 1);
  CHECK(r1.text == "R1");
  CHECK(r1.produced_at_turn == 1);
  CHECK(b.last_reflection()->text == "R1");
  reflect(b, env::Game::g2048, backend, {}, 2);
  CHECK(b.last_reflection()->text == "R2");
  reflect(b, env::Game::g2048, backend, {}, 3);
  CHECK(b.last_reflection()->text == "R2");
  CHECK_THROWS_AS(reflect(b, env::Game::g2048, backend, {}, 4), BackendError);
}

TEST_CASE("template parsing") {
  const auto t = harness::parse_template(
      "id: x\ngame: tetris\nprovenance: optimized\nparent: y\nstep: 4\n=== system ===\nS\n=== user ===\nA "
      "{Previous Game History} B {Symbolic Board Features}\n");
  CHECK(t.id == "x");
  CHECK(t.game == env::Game::tetris);
  CHECK(t.provenance == harness::Provenance::optimized);
  CHECK(t.parent == "y");
  CHECK(t.step == 4);
  CHECK(t.system_text == "S");
  CHECK_NOTHROW(harness::validate_action_template(t));
  CHECK(harness::parse_template(harness::serialize(t)) == t);
  CHECK_THROWS_AS(harness::parse_template("id: x\n=== user ===\n"), Error);
  CHECK_THROWS_AS(harness::parse_template("id: x\ngame: chess\n=== system ===\n=== user ===\n"), Error);

  auto missing = t;
  missing.user_text = "{Previous Game History} only";
  try {
    harness::validate_action_template(missing);
    FAIL("expected MissingPlaceholder");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingPlaceholder);
  }
  auto twice = t;
  twice.user_text += " {Symbolic Board Features}";
  CHECK_THROWS_AS(harness::validate_action_template(twice), Error);
}

TEST_CASE("bundled action templates are valid") {
  int action_templates = 0;
  for (const auto& id : harness::bundled_template_ids()) {
    const auto t = harness::load_template(id);
    CHECK(t.id == id);
    if (id == "reflection") continue;
    ++action_templates;
    CHECK_NOTHROW(harness::validate_action_template(t));
    if (t.provenance == harness::Provenance::optimized) CHECK_FALSE(t.parent.empty());
  }
  CHECK(action_templates == 7);
  for (auto g : env::kAllGames) CHECK(harness::load_template(harness::default_template_id(g)).game == g);
}

TEST_CASE("instantiate is single pass") {
  const auto out = harness::instantiate("a {X} b {Y} {Z}", {{"{X}", "{Y}"}, {"{Y}", "y"}});
  CHECK(out == "a {Y} b y {Z}");
}
