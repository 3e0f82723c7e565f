#include "promptopt/promptopt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/text.hpp"
#include "env/serialization.hpp"

namespace gameharness::promptopt {

using harness::PromptTemplate;

Json to_json(const EnvSuite& suite) {
  Json seeds = Json::array();
  for (auto s : suite.seeds) seeds.push_back(std::to_string(s));
  return Json{{"game", env::to_string(suite.game)},
              {"env", env::to_json(suite.config)},
              {"seeds", seeds},
              {"turn_budget", suite.turn_budget}};
}

EnvSuite env_suite_from_json(const Json& j) {
  try {
    EnvSuite s;
    s.game = env::parse_game(j.at("game").get<std::string>());
    if (j.contains("env")) s.config = env::env_config_from_json(j.at("env"));
    for (const auto& v : j.at("seeds"))
      s.seeds.push_back(v.is_string() ? std::stoull(v.get<std::string>()) : v.get<std::uint64_t>());
    s.turn_budget = j.value("turn_budget", 0);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad environment suite: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad seed in environment suite: ") + e.what());
  }
}

Model model_from_spec(const llm::BackendSpec& spec) {
  return Model{spec.name, [spec](std::uint64_t seed) { return llm::make_backend(spec, seed); }};
}

void validate(const OptimizationConfig& config, env::Game game) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (config.k < 1) fail("k must be >= 1");
  if (config.episodes_per_eval < 1) fail("episodes_per_eval must be >= 1");
  if (config.minibatch < 1) fail("minibatch must be >= 1");
  if (config.train.empty()) fail("train suite is empty");
  if (config.dev.empty()) fail("dev suite is empty");
  if (config.targets.empty()) fail("no target models");
  if (config.optimizers.empty()) fail("no optimizer models");
  std::set<std::pair<int, std::uint64_t>> train_seeds;
  for (const auto* suite : {&config.train, &config.dev})
    for (const auto& e : *suite) {
      if (e.seeds.empty()) fail("environment without seeds");
      if (e.game != game)
        fail(fmt::format("suite game {} does not match template game {}", env::to_string(e.game),
                         env::to_string(game)));
      if (e.turn_budget < 0) fail("turn_budget must be >= 0");
    }
  for (const auto& e : config.train)
    for (int j = 0; j < config.minibatch; ++j) train_seeds.emplace(static_cast<int>(e.game), episode_seed(e, j));
  for (const auto& e : config.train)
    for (auto s : e.seeds) train_seeds.emplace(static_cast<int>(e.game), s);
  for (const auto& e : config.dev)
    for (int j = 0; j < config.episodes_per_eval; ++j)
      if (train_seeds.count({static_cast<int>(e.game), episode_seed(e, j)}))
        fail(fmt::format("seed {} appears in both train and dev suites", episode_seed(e, j)));
}

// ---- evaluation -------------------------------------------------------------

std::uint64_t episode_seed(const EnvSuite& suite, int j) {
  const auto n = static_cast<int>(suite.seeds.size());
  const auto base = suite.seeds.at(static_cast<std::size_t>(j % n));
  return j < n ? base : derive_seed(base, static_cast<std::uint64_t>(j / n));
}

namespace {

std::string excerpt_of(const harness::EpisodeRecord& rec) {
  std::string out = fmt::format("model {} | seed {} | score {} | ended by {}", rec.model, rec.seed,
                                text::format_number(rec.final_score.reported), rec.termination);
  const std::size_t from = rec.turns.size() > 5 ? rec.turns.size() - 5 : 0;
  for (std::size_t i = from; i < rec.turns.size(); ++i) {
    const auto& t = rec.turns[i];
    out += fmt::format("\nturn {}: {}{} reward={} score={}", t.turn, t.action, t.fallback ? " (fallback)" : "",
                       text::format_number(t.reward), text::format_number(t.score_after));
  }
  if (!rec.turns.empty() && !rec.turns.back().thought.empty()) {
    std::string thought(text::trim(rec.turns.back().thought));
    if (thought.size() > 240) thought = thought.substr(0, 240) + "...";
    out += "\nlast thought: " + thought;
  }
  return out;
}

}  // namespace

EvalResult evaluate_template(const PromptTemplate& tmpl, const std::vector<EnvSuite>& suite,
                             const std::vector<Model>& models, int episodes, const harness::HarnessConfig& harness,
                             std::size_t workers) {
  if (suite.empty()) throw Error(ErrorCode::InvalidConfig, "evaluation suite is empty");
  if (models.empty()) throw Error(ErrorCode::InvalidConfig, "no models to evaluate");
  if (episodes < 1) throw Error(ErrorCode::InvalidConfig, "episodes must be >= 1");
  for (const auto& e : suite)
    if (e.seeds.empty()) throw Error(ErrorCode::InvalidConfig, "environment without seeds");
  harness::validate_action_template(tmpl);

  struct Job {
    std::size_t env, model;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t e = 0; e < suite.size(); ++e)
    for (std::size_t m = 0; m < models.size(); ++m)
      for (int j = 0; j < episodes; ++j) jobs.push_back({e, m, episode_seed(suite[e], j)});

  auto outcomes = parallel_map(jobs.size(), workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& env = suite[job.env];
    const auto& model = models[job.model];
    auto backend = model.make(derive_seed(job.seed, text::fnv1a(model.name)));
    const auto rec = harness::run_episode(env.game, env.config, harness, tmpl, *backend, job.seed, env.turn_budget,
                                          fmt::format("{}-{}-{}", tmpl.id, model.name, job.seed));
    return EpisodeOutcome{model.name, env.game, job.seed, rec.final_score.reported, excerpt_of(rec)};
  });

  EvalResult r;
  std::map<std::string, std::pair<double, int>> sums;
  for (const auto& o : outcomes) {
    auto& [sum, n] = sums[o.model];
    sum += o.score;
    ++n;
  }
  double total = 0.0;
  for (const auto& [name, sn] : sums) {
    r.by_model[name] = sn.first / sn.second;
    total += r.by_model[name];
  }
  r.mean = total / static_cast<double>(r.by_model.size());
  r.episodes = std::move(outcomes);
  return r;
}

// ---- mutation ---------------------------------------------------------------

Feedback make_feedback(const EvalResult& result, std::size_t count) {
  std::vector<std::size_t> order(result.episodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.episodes[a].score < result.episodes[b].score;
  });
  Feedback f{result.mean, {}};
  for (std::size_t i = 0; i < std::min(count, order.size()); ++i) f.excerpts.push_back(result.episodes[order[i]].excerpt);
  return f;
}

llm::PromptMessages build_rewrite_request(const PromptTemplate& tmpl, const Feedback& feedback) {
  std::string system =
      "You revise prompt templates for an agent that plays a turn-based game. "
      "Return the complete revised template as <system_prompt>...</system_prompt> followed by "
      "<user_prompt>...</user_prompt>. The user prompt must contain the markers " +
      std::string(harness::kHistorySlot) + " and " + std::string(harness::kBoardSlot) +
      " exactly once each, unchanged, and must keep the required reply format.";
  std::string user = fmt::format("Game: {}\nCurrent mean score on the training episodes: {}\n\n",
                                 env::to_string(tmpl.game), text::format_number(feedback.train_score));
  user += "<system_prompt>\n" + tmpl.system_text + "\n</system_prompt>\n<user_prompt>\n" + tmpl.user_text +
          "\n</user_prompt>\n\n";
  if (feedback.excerpts.empty()) {
    user += "No episode excerpts are available.\n";
  } else {
    user += "Lowest-scoring episodes:\n";
    for (std::size_t i = 0; i < feedback.excerpts.size(); ++i)
      user += fmt::format("\n[{}] {}\n", i + 1, feedback.excerpts[i]);
  }
  user += "\nRewrite the template so the agent scores higher.";
  return llm::PromptMessages{{{"system", system, std::nullopt}, {"user", user, std::nullopt}}, nullptr};
}

namespace {

std::optional<std::string> tagged(std::string_view reply, std::string_view tag) {
  const std::string open = fmt::format("<{}>", tag), close = fmt::format("</{}>", tag);
  const auto a = reply.find(open);
  if (a == std::string_view::npos) return std::nullopt;
  const auto b = reply.find(close, a + open.size());
  if (b == std::string_view::npos) return std::nullopt;
  return std::string(text::trim(reply.substr(a + open.size(), b - a - open.size())));
}

std::string slug(std::string_view name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  return out;
}

}  // namespace

PromptTemplate propose_mutation(const PromptTemplate& tmpl, const Feedback& feedback, llm::Backend& optimizer,
                                const std::string& optimizer_name, int step, const llm::GenParams& params) {
  const auto reply = optimizer.complete(build_rewrite_request(tmpl, feedback), params).text;
  const auto system = tagged(reply, "system_prompt");
  const auto user = tagged(reply, "user_prompt");
  if (!system || !user)
    throw Error(ErrorCode::MalformedCandidate, "optimizer reply lacks <system_prompt> or <user_prompt>");
  PromptTemplate cand;
  const auto root = tmpl.provenance == harness::Provenance::optimized && tmpl.id.find('~') != std::string::npos
                        ? tmpl.id.substr(0, tmpl.id.find('~'))
                        : tmpl.id;
  cand.id = fmt::format("{}~{}~{}", root, slug(optimizer_name), step);
  cand.game = tmpl.game;
  cand.provenance = harness::Provenance::optimized;
  cand.parent = tmpl.id;
  cand.step = step;
  cand.system_text = *system;
  cand.user_text = *user;
  try {
    harness::validate_action_template(cand);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedCandidate, e.what());
  }
  return cand;
}

// ---- search -----------------------------------------------------------------

OptimizationResult optimize(const OptimizationConfig& config, const PromptTemplate& base) {
  harness::validate_action_template(base);
  validate(config, base.game);

  OptimizationResult out;
  auto& trace = out.trace;
  const auto base_train =
      evaluate_template(base, config.train, config.targets, config.minibatch, config.harness, config.workers);

  for (std::size_t b = 0; b < config.optimizers.size(); ++b) {
    const auto& opt = config.optimizers[b];
    auto backend = opt.make(derive_seed(config.seed, b));
    PromptTemplate best = base;
    auto best_eval = base_train;

    for (int step = 1; step <= config.k; ++step) {
      StepEntry entry{opt.name, step, "", std::nullopt, false, best_eval.mean, ""};
      try {
        auto cand = propose_mutation(best, make_feedback(best_eval), *backend, opt.name, step, config.harness.gen);
        auto eval =
            evaluate_template(cand, config.train, config.targets, config.minibatch, config.harness, config.workers);
        entry.candidate_id = cand.id;
        entry.train_score = eval.mean;
        if (eval.mean > best_eval.mean) {
          entry.accepted = true;
          best = std::move(cand);
          best_eval = std::move(eval);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedCandidate) throw;
        entry.note = e.what();
      }
      entry.best_train = best_eval.mean;
      trace.steps.push_back(std::move(entry));
    }

    const auto dev =
        evaluate_template(best, config.dev, config.targets, config.episodes_per_eval, config.harness, config.workers);
    trace.branches.push_back({opt.name, best, base_train.mean, best_eval.mean, dev.mean, dev.by_model});
  }

  const BranchResult* winner = &trace.branches.front();
  for (const auto& br : trace.branches)
    if (br.dev_mean > winner->dev_mean) winner = &br;
  trace.winner = winner->optimizer;
  trace.s_best = winner->dev_mean;
  out.best = winner->best;
  return out;
}

Json to_json(const StepEntry& e) {
  return Json{{"type", "step"},
              {"optimizer", e.optimizer},
              {"step", e.step},
              {"candidate_id", e.candidate_id.empty() ? Json() : Json(e.candidate_id)},
              {"train_score", e.train_score ? Json(*e.train_score) : Json()},
              {"accepted", e.accepted},
              {"best_train", e.best_train},
              {"note", e.note}};
}

Json to_json(const BranchResult& b) {
  Json by_model = Json::object();
  for (const auto& [m, s] : b.dev_by_model) by_model[m] = s;
  return Json{{"type", "branch"},
              {"optimizer", b.optimizer},
              {"best_id", b.best.id},
              {"base_train", b.base_train},
              {"best_train", b.best_train},
              {"s_avg", b.dev_mean},
              {"dev_by_model", by_model},
              {"template", harness::serialize(b.best)}};
}

std::string to_jsonl(const OptimizationTrace& trace) {
  std::string out;
  for (const auto& s : trace.steps) out += to_json(s).dump() + "\n";
  for (const auto& b : trace.branches) out += to_json(b).dump() + "\n";
  out += Json{{"type", "winner"}, {"optimizer", trace.winner}, {"s_best", trace.s_best}}.dump() + "\n";
  return out;
}

// ---- prompt discrepancy -----------------------------------------------------

double abs_delta(const std::vector<double>& p1, const std::vector<double>& p2) {
  if (p1.empty() || p2.empty()) throw Error(ErrorCode::EmptyInput, "prompt discrepancy needs scores for both templates");
  auto mean = [](const std::vector<double>& xs) { return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size(); };
  return std::fabs(mean(p1) - mean(p2));
}

Discrepancy prompt_discrepancy(const std::string& model, const std::vector<double>& empirical_1,
                               const std::vector<double>& empirical_2, const std::vector<double>& optimized_1,
                               const std::vector<double>& optimized_2) {
  Discrepancy d{model, abs_delta(empirical_1, empirical_2), abs_delta(optimized_1, optimized_2), std::nullopt};
  if (d.delta_empirical > 0) d.reduction_pct = (d.delta_empirical - d.delta_optimized) / d.delta_empirical * 100.0;
  return d;
}

Json to_json(const Discrepancy& d) {
  return Json{{"model", d.model},
              {"delta_empirical", d.delta_empirical},
              {"delta_optimized", d.delta_optimized},
              {"reduction_pct", d.reduction_pct ? Json(*d.reduction_pct) : Json()}};
}

std::string to_markdown(const std::vector<Discrepancy>& rows) {
  std::string out = "| model | delta_empirical | delta_optimized | reduction % |\n|---|---|---|---|\n";
  for (const auto& d : rows)
    out += fmt::format("| {} | {:.1f} | {:.1f} | {} |\n", d.model, d.delta_empirical, d.delta_optimized,
                       d.reduction_pct ? fmt::format("{:.1f}", *d.reduction_pct) : "n/a");
  return out;
}

}  // namespace gameharness::promptopt
