#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gameharness/gameharness.h"

using nlohmann::ordered_json;

namespace {

// Thrown for problems detected by the tool itself (bad files, bad flags).
struct CliError {
  gh_status status;
  std::string message;
};

int report(gh_status status, const std::string& name, const std::string& message) {
  std::cerr << ordered_json{{"status", static_cast<int>(status)}, {"error", name}, {"message", message}}.dump()
            << "\n";
  return status;
}

void check(gh_status s) {
  if (s != GH_OK) throw s;
}

std::string take(char* s) {
  std::string out(s ? s : "");
  gh_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError{GH_ERR_CONFIG, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ordered_json load_json(const std::string& path) {
  try {
    return ordered_json::parse(slurp(path));
  } catch (const ordered_json::parse_error& e) {
    throw CliError{GH_ERR_CONFIG, path + ": " + e.what()};
  }
}

struct RunFlags {
  std::string config;
  std::vector<std::string> games;
  std::vector<std::string> backends;
  std::vector<std::string> conditions;
  std::optional<int> runs;
  std::optional<std::string> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<int> budget;
  std::optional<int> baseline_runs;
  bool debug_http = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_conditions) {
  cmd->add_option("--config", f.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--game", f.games, "Game to run; repeatable, replaces the configured list");
  cmd->add_option("--backend", f.backends, "Backend spec; repeatable, replaces the configured list");
  if (with_conditions)
    cmd->add_option("--condition", f.conditions, "zs | memory | perception | both; repeatable");
  cmd->add_option("--runs", f.runs, "Runs per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Run directory");
  cmd->add_option("--workers", f.workers, "Parallel episodes")->check(CLI::PositiveNumber);
  cmd->add_option("--budget", f.budget, "Turn budget for every game (0: none)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--baseline-runs", f.baseline_runs, "Random baseline runs per game (0 skips)");
  cmd->add_flag("--debug-http", f.debug_http, "Mirror HTTP request and response bodies into the run directory");
}

// Flags override values from the file.
ordered_json run_config(const RunFlags& f) {
  ordered_json j = f.config.empty() ? ordered_json::object() : load_json(f.config);
  if (!j.is_object()) throw CliError{GH_ERR_CONFIG, "run configuration must be a JSON object"};
  if (!f.games.empty()) {
    j["games"] = ordered_json::array();
    for (const auto& g : f.games) j["games"].push_back({{"game", g}});
  }
  if (f.budget && j.contains("games"))
    for (auto& g : j["games"]) {
      if (g.is_string()) g = ordered_json{{"game", g}};
      g["turn_budget"] = *f.budget;
    }
  if (!f.backends.empty()) j["backends"] = f.backends;
  if (!f.conditions.empty()) j["conditions"] = f.conditions;
  if (f.runs) j["runs"] = *f.runs;
  if (f.seed) j["seed"] = *f.seed;
  if (f.out) j["output_dir"] = *f.out;
  if (f.workers) j["workers"] = *f.workers;
  if (f.baseline_runs) j["baseline_runs"] = *f.baseline_runs;
  if (f.debug_http) j["debug_http"] = true;
  return j;
}

std::string fmt_num(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

void print_transcript(const ordered_json& rec) {
  std::cout << "episode " << rec["id"].get<std::string>() << "  template " << rec.value("template", "") << "\n";
  for (const auto& t : rec["turns"]) {
    std::cout << "turn " << t["turn"].get<int>() << ": " << t["action"].get<std::string>()
              << (t.value("fallback", false) ? " (fallback)" : "") << "  reward " << fmt_num(t["reward"].get<double>())
              << "  score " << fmt_num(t["score_after"].get<double>()) << "\n";
    const auto thought = t.value("thought", std::string());
    if (!thought.empty()) std::cout << "  thought: " << thought << "\n";
  }
  std::cout << "final score " << fmt_num(rec["final_score"]["reported"].get<double>()) << " ("
            << rec["termination"].get<std::string>() << ")\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw CliError{GH_ERR_CONFIG, "cannot write " + path};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent harness for turn-based game environments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gh_version()));

  // play
  std::string game, backend = "scripted:demo", condition = "both", tmpl, env_config, fallback, record_path;
  std::string seed = "0";
  int budget = 0;
  auto* play = app.add_subcommand("play", "Play one episode and print its transcript");
  play->add_option("--game", game, "g2048 | sokoban | tetris | candy")->required();
  play->add_option("--backend", backend, "Backend spec");
  play->add_option("--seed", seed, "Episode seed");
  play->add_option("--budget", budget, "Turn budget (0: none)")->check(CLI::NonNegativeNumber);
  play->add_option("--condition", condition, "zs | memory | perception | both");
  play->add_option("--template", tmpl, "Template id or file");
  play->add_option("--env-config", env_config, "Environment config (JSON file)")->check(CLI::ExistingFile);
  play->add_option("--fallback", fallback, "random_legal | forfeit");
  play->add_option("--record", record_path, "Also write the episode record here");

  RunFlags eval_flags, ablate_flags;
  auto* eval = app.add_subcommand("eval", "Run every configured cell and write a run directory");
  add_run_flags(eval, eval_flags, true);
  auto* ablate = app.add_subcommand("ablate", "Run the four harness conditions for every game and backend");
  add_run_flags(ablate, ablate_flags, false);

  int baseline_runs = 30, workers = 1;
  std::string baseline_out;
  auto* baseline = app.add_subcommand("baseline", "Random-play baseline for one game");
  baseline->add_option("--game", game, "Game")->required();
  baseline->add_option("--runs", baseline_runs, "Runs")->check(CLI::Range(2, 1000000));
  baseline->add_option("--seed", seed, "Master seed");
  baseline->add_option("--workers", workers, "Parallel episodes")->check(CLI::PositiveNumber);
  baseline->add_option("--env-config", env_config, "Environment config (JSON file)")->check(CLI::ExistingFile);
  baseline->add_option("--out", baseline_out, "Write the baseline JSON here");

  std::string from;
  auto* stats = app.add_subcommand("stats", "Recompute reports from a run directory");
  stats->add_option("--from", from, "Run directory")->required()->check(CLI::ExistingDirectory);

  RunFlags opt_flags;
  std::optional<int> k;
  auto* optimize = app.add_subcommand("optimize", "Search for a better prompt template");
  optimize->add_option("--config", opt_flags.config, "Run configuration with an optimize section")
      ->required()
      ->check(CLI::ExistingFile);
  optimize->add_option("--seed", opt_flags.seed, "Master seed");
  optimize->add_option("--out", opt_flags.out, "Run directory");
  optimize->add_option("--workers", opt_flags.workers, "Parallel episodes")->check(CLI::PositiveNumber);
  optimize->add_option("--k", k, "Steps per optimizer")->check(CLI::PositiveNumber);

  std::string state_path, png_path, style_path;
  auto* render = app.add_subcommand("render", "Render a state as PNG");
  auto* state_opt = render->add_option("--state", state_path, "State JSON file")->check(CLI::ExistingFile);
  render->add_option("--game", game, "Render the initial state of this game instead")->excludes(state_opt);
  render->add_option("--seed", seed, "Seed for --game");
  render->add_option("--style", style_path, "Render style JSON")->check(CLI::ExistingFile);
  render->add_option("--out", png_path, "Output PNG")->required();

  auto* probe = app.add_subcommand("probe", "Check that a backend answers");
  probe->add_option("--backend", backend, "Backend spec")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(GH_ERR_USAGE, "Usage", e.what());
  }

  auto parse_seed = [&](const std::string& s) -> std::uint64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used == s.size() && s.find('-') == std::string::npos) return v;
    } catch (const std::exception&) {
    }
    throw CliError{GH_ERR_USAGE, "seed must be a non-negative integer: " + s};
  };

  try {
    char* buf = nullptr;
    if (*play) {
      ordered_json req{{"game", game}, {"backend", backend}, {"seed", std::to_string(parse_seed(seed))},
                       {"turn_budget", budget}, {"condition", condition}};
      if (!tmpl.empty()) req["template"] = tmpl;
      if (!env_config.empty()) req["env"] = load_json(env_config);
      if (!fallback.empty()) req["fallback"] = fallback;
      check(gh_play(req.dump().c_str(), &buf));
      const auto record = take(buf);
      if (!record_path.empty()) write_file(record_path, record + "\n");
      print_transcript(ordered_json::parse(record));
    } else if (*eval || *ablate) {
      auto j = run_config(*eval ? eval_flags : ablate_flags);
      if (*ablate) j["conditions"] = {"zs", "memory", "perception", "both"};
      check(gh_run_eval(j.dump().c_str(), &buf));
      std::cout << take(buf) << "\n";
    } else if (*baseline) {
      const auto cfg = env_config.empty() ? std::string() : load_json(env_config).dump();
      check(gh_random_baseline(game.c_str(), cfg.empty() ? nullptr : cfg.c_str(), baseline_runs, parse_seed(seed),
                               static_cast<size_t>(workers), &buf));
      const auto out = ordered_json::parse(take(buf)).dump(2) + "\n";
      if (!baseline_out.empty()) write_file(baseline_out, out);
      std::cout << out;
    } else if (*stats) {
      check(gh_run_stats(from.c_str(), &buf));
      std::cout << take(buf) << "\n";
    } else if (*optimize) {
      auto j = run_config(opt_flags);
      if (k) {
        if (!j.contains("optimize")) throw CliError{GH_ERR_CONFIG, "configuration has no optimize section"};
        j["optimize"]["k"] = *k;
      }
      check(gh_run_optimize(j.dump().c_str(), &buf));
      std::cout << take(buf) << "\n";
    } else if (*render) {
      gh_state* state = nullptr;
      if (!state_path.empty()) {
        check(gh_state_from_json(slurp(state_path).c_str(), &state));
      } else {
        if (game.empty()) throw CliError{GH_ERR_USAGE, "render needs --state or --game"};
        gh_env* env = nullptr;
        check(gh_env_create(game.c_str(), nullptr, &env));
        const auto s = gh_env_reset(env, parse_seed(seed), &state);
        gh_env_destroy(env);
        check(s);
      }
      const auto style = style_path.empty() ? std::string() : slurp(style_path);
      const auto s = gh_state_render_png(state, style.empty() ? nullptr : style.c_str(), png_path.c_str());
      gh_state_destroy(state);
      check(s);
      std::cout << png_path << "\n";
    } else if (*probe) {
      gh_backend* b = nullptr;
      check(gh_backend_create(backend.c_str(), 0, &b));
      const auto s = gh_backend_probe(b, &buf);
      gh_backend_destroy(b);
      check(s);
      const auto health = ordered_json::parse(take(buf));
      std::cout << health.dump() << "\n";
      if (!health["healthy"].get<bool>())
        return report(GH_ERR_BACKEND, "Backend", health.value("detail", std::string("backend is unhealthy")));
    }
  } catch (gh_status s) {
    std::cerr << gh_last_error() << "\n";
    return s;
  } catch (const CliError& e) {
    return report(e.status, e.status == GH_ERR_USAGE ? "Usage" : "InvalidConfig", e.message);
  }
  return 0;
}
