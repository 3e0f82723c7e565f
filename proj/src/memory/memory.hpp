#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "common/json.hpp"
#include "env/types.hpp"
#include "llm/backend.hpp"

namespace gameharness::memory {

inline constexpr int kDefaultCapacity = 5;

struct Transition {
  int turn = 0;
  std::string observation_text;  // compact board text before the action
  env::Action action;
  double reward = 0.0;
  double score_after = 0.0;
};

struct Reflection {
  std::string text;
  int produced_at_turn = 0;
  std::string model;
};

using Trajectory = std::vector<Transition>;

class MemoryBuffer {
 public:
  explicit MemoryBuffer(int capacity = kDefaultCapacity);

  // Throws Error{NonMonotonicTurn} unless t.turn exceeds the last stored
  // turn, Error{InvalidConfig} for non-finite rewards or scores.
  void push(Transition t);

  // The most recent <= capacity transitions strictly before `turn`, oldest
  // first.
  Trajectory window(int turn) const;
  Trajectory entries() const { return {entries_.begin(), entries_.end()}; }

  int capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const std::optional<Reflection>& last_reflection() const { return last_reflection_; }
  void set_reflection(Reflection r) { last_reflection_ = std::move(r); }

 private:
  int capacity_;
  std::deque<Transition> entries_;
  std::optional<int> last_turn_;
  std::optional<Reflection> last_reflection_;
};

// Serialization used inside prompts:
//
//   Turn 3: move=left reward=4 score_after=12
//   <observation text>
//
// Transitions are separated by one blank line.
std::string serialize(const Transition& t);
std::string serialize(const Trajectory& trajectory);

Json to_json(const Transition& t);

// Instantiates the bundled reflection template with the buffer's full window.
// Throws Error{EmptyBuffer} when there is nothing to reflect on.
llm::PromptMessages build_reflection_request(const MemoryBuffer& buffer, env::Game game);

// Queries `backend` and stores the reply verbatim as the buffer's reflection.
Reflection reflect(MemoryBuffer& buffer, env::Game game, llm::Backend& backend, const llm::GenParams& params,
                   int turn);

}  // namespace gameharness::memory
