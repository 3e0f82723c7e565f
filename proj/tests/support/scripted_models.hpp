#pragma once

#include <string>

#include "llm/backend.hpp"

// Deterministic stand-ins for target and optimizer models in prompt search.
namespace support {

using namespace gameharness;

// Plays legal moves for a number of turns set by a keyword in the system
// prompt, then replies with garbage (a forfeit under Fallback::forfeit).
class KeywordBackend : public llm::Backend {
 public:
  explicit KeywordBackend(std::string name) : name_(std::move(name)) {}
  llm::Completion complete(const llm::PromptMessages& p, const llm::GenParams&) override {
    int allowed = 2;
    if (p.system().content.find("STYLE-A") != std::string::npos) allowed = 4;
    if (p.system().content.find("STYLE-B") != std::string::npos) allowed = 6;
    const auto legal = llm::parse_legal_trailer(p.user().content);
    if (legal.empty() || calls_++ >= allowed) return {"I give up", {}, 0};
    return {"move: " + legal.front(), {}, 0};
  }
  std::string kind() const override { return "test"; }
  std::string model() const override { return name_; }

 private:
  std::string name_;
  int calls_ = 0;
};

// Rewrites the template by appending `tag` to the system text, or returns a
// fixed reply when `tag` starts with '!'.
class RewriteBackend : public llm::Backend {
 public:
  explicit RewriteBackend(std::string tag) : tag_(std::move(tag)) {}
  llm::Completion complete(const llm::PromptMessages& p, const llm::GenParams&) override {
    ++calls;
    last_request = p.user().content;
    if (tag_ == "!drop") return {"<system_prompt>x</system_prompt><user_prompt>{Previous Game History} only</user_prompt>", {}, 0};
    if (tag_ == "!none") return {"Sorry, I cannot help.", {}, 0};
    auto system = extract(p.user().content, "system_prompt");
    auto user = extract(p.user().content, "user_prompt");
    if (tag_ != "!echo") system += " " + tag_;
    return {"<system_prompt>\n" + system + "\n</system_prompt>\n<user_prompt>\n" + user + "\n</user_prompt>", {}, 0};
  }
  std::string kind() const override { return "test"; }
  std::string model() const override { return "rewriter"; }

  int calls = 0;
  std::string last_request;

 private:
  static std::string extract(const std::string& s, const std::string& tag) {
    const auto a = s.find("<" + tag + ">\n") + tag.size() + 3;
    const auto b = s.find("\n</" + tag + ">", a);
    return s.substr(a, b - a);
  }
  std::string tag_;
};

}  // namespace support
