#include "memory/memory.hpp"

#include <climits>
#include <cmath>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/text.hpp"
#include "harness/template.hpp"

namespace gameharness::memory {

MemoryBuffer::MemoryBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw Error(ErrorCode::InvalidConfig, "memory capacity must be >= 1");
}

void MemoryBuffer::push(Transition t) {
  if (last_turn_ && t.turn <= *last_turn_)
    throw Error(ErrorCode::NonMonotonicTurn,
                fmt::format("transition turn {} does not follow stored turn {}", t.turn, *last_turn_));
  if (!std::isfinite(t.reward) || !std::isfinite(t.score_after))
    throw Error(ErrorCode::InvalidConfig, "transition reward and score must be finite");
  last_turn_ = t.turn;
  entries_.push_back(std::move(t));
  while (entries_.size() > static_cast<std::size_t>(capacity_)) entries_.pop_front();
}

Trajectory MemoryBuffer::window(int turn) const {
  Trajectory out;
  for (const auto& t : entries_)
    if (t.turn < turn) out.push_back(t);
  if (out.size() > static_cast<std::size_t>(capacity_))
    out.erase(out.begin(), out.end() - capacity_);
  return out;
}

std::string serialize(const Transition& t) {
  std::string out = fmt::format("Turn {}: move={} reward={} score_after={}\n", t.turn, env::to_token(t.action),
                                text::format_number(t.reward), text::format_number(t.score_after));
  out += t.observation_text;
  if (!out.empty() && out.back() != '\n') out += '\n';
  return out;
}

std::string serialize(const Trajectory& trajectory) {
  std::vector<std::string> parts;
  parts.reserve(trajectory.size());
  for (const auto& t : trajectory) parts.push_back(serialize(t));
  auto out = text::join(parts, "\n");
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

Json to_json(const Transition& t) {
  return Json{{"turn", t.turn},
              {"action", env::to_token(t.action)},
              {"reward", t.reward},
              {"score_after", t.score_after},
              {"observation", t.observation_text}};
}

llm::PromptMessages build_reflection_request(const MemoryBuffer& buffer, env::Game game) {
  if (buffer.empty()) throw Error(ErrorCode::EmptyBuffer, "no transitions to reflect on");
  static const harness::PromptTemplate tmpl = harness::load_template("reflection");
  const std::string history = serialize(buffer.window(INT_MAX));
  const std::string name(env::display_name(game));
  // The shipped wording names 2048; other games get their own title.
  auto retitle = [&](const std::string& s) { return game == env::Game::g2048 ? s : text::replace_all(s, "2048", name); };
  llm::PromptMessages p;
  p.messages.push_back({"system", retitle(tmpl.system_text), std::nullopt});
  p.messages.push_back(
      {"user", harness::instantiate(retitle(tmpl.user_text), {{std::string(harness::kHistorySlot), history}}),
       std::nullopt});
  return p;
}

Reflection reflect(MemoryBuffer& buffer, env::Game game, llm::Backend& backend, const llm::GenParams& params,
                   int turn) {
  const auto request = build_reflection_request(buffer, game);
  const auto reply = backend.complete(request, params);
  Reflection r{reply.text, turn, backend.model()};
  // An empty reply carries nothing to inject; the previous reflection stays.
  if (!text::trim(r.text).empty()) buffer.set_reflection(r);
  return r;
}

}  // namespace gameharness::memory
