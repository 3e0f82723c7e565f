#include "runner/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/text.hpp"
#include "env/serialization.hpp"

namespace gameharness::runner {

namespace fs = std::filesystem;
using harness::Condition;

namespace {

[[noreturn]] void bad(const std::string& message) { throw Error(ErrorCode::InvalidConfig, message); }

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) bad(fmt::format("{} must be an object", where));
  for (const auto& [k, _] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      bad(fmt::format("unknown key '{}' in {}", k, where));
}

std::uint64_t seed_of(const Json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::stoull(s);
  }
  bad("seeds must be non-negative integers or decimal strings");
}

std::vector<llm::BackendSpec> specs_from_json(const Json& j, std::string_view where, bool allow_empty = false) {
  if (!j.is_array() || (j.empty() && !allow_empty)) bad(fmt::format("{} must be a nonempty list", where));
  std::vector<llm::BackendSpec> out;
  for (const auto& s : j) out.push_back(llm::backend_spec_from_json(s));
  return out;
}

Json specs_to_json(const std::vector<llm::BackendSpec>& specs) {
  Json out = Json::array();
  for (const auto& s : specs) out.push_back(llm::to_json(s));
  return out;
}

std::vector<promptopt::EnvSuite> suites_from_json(const Json& j, std::string_view where) {
  if (!j.is_array() || j.empty()) bad(fmt::format("{} must be a nonempty list", where));
  std::vector<promptopt::EnvSuite> out;
  for (const auto& s : j) {
    check_keys(s, {"game", "env", "seeds", "turn_budget"}, where);
    out.push_back(promptopt::env_suite_from_json(s));
  }
  return out;
}

Json suites_to_json(const std::vector<promptopt::EnvSuite>& suites) {
  Json out = Json::array();
  for (const auto& s : suites) out.push_back(promptopt::to_json(s));
  return out;
}

std::string slug(std::string_view name) {
  std::string out;
  for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.' ? c : '_';
  return out;
}

void write_text(const fs::path& path, std::string_view content) {
  fs::create_directories(path.parent_path());
  text::write_file(path.string(), content);
}

std::string read_text(const fs::path& path) {
  if (!fs::exists(path)) throw Error(ErrorCode::Io, "missing file: " + path.string());
  return text::read_file(path.string());
}

fs::path run_dir(const RunConfig& c) { return c.output_dir.empty() ? fs::path("runs") / c.name : fs::path(c.output_dir); }

// Creates `dir` and writes the snapshot; returns its hash.
std::string start_run(const fs::path& dir, const RunConfig& config) {
  if (fs::exists(dir / "config.json"))
    throw Error(ErrorCode::InvalidConfig, "run directory already holds a run: " + dir.string());
  fs::create_directories(dir);
  const auto snapshot = to_json(config).dump(2) + "\n";
  write_text(dir / "config.json", snapshot);
  return sha256_hex(snapshot);
}

// manifest.json: hash of every artifact under `dir`, keyed by relative path.
void write_manifest(const fs::path& dir, const std::string& config_hash) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      files.push_back(fs::relative(e.path(), dir).generic_string());
  std::sort(files.begin(), files.end());
  Json artifacts = Json::object();
  for (const auto& f : files) artifacts[f] = sha256_hex(text::read_file((dir / f).string()));
  write_text(dir / "manifest.json", Json{{"config_hash", config_hash}, {"artifacts", artifacts}}.dump(2) + "\n");
}

std::string config_key(const harness::EpisodeRecord& r) {
  const auto blob = env::to_json(r.env).dump() + "|" + harness::to_json(r.harness).dump() + "|" + r.template_id +
                    "|" + std::to_string(r.turn_budget);
  return text::hex64(text::fnv1a(blob));
}

}  // namespace

// ---- configuration ----------------------------------------------------------

RunConfig run_config_from_json(const Json& j) {
  check_keys(j, {"schema", "name", "games", "backends", "conditions", "enriched_perception", "max_parse_retries",
                 "fallback", "gen", "runs", "seed", "baseline_runs", "workers", "output_dir", "debug_http", "optimize"},
             "run config");
  RunConfig c;
  try {
    if (j.contains("schema") && j["schema"].get<std::string>() != kRunSchema)
      bad("unsupported run config schema: " + j["schema"].get<std::string>());
    c.name = j.value("name", c.name);
    if (j.contains("games")) {
      if (!j["games"].is_array()) bad("games must be a list");
      for (const auto& g : j["games"]) {
        GameSpec s;
        if (g.is_string()) {
          s.game = env::parse_game(g.get<std::string>());
        } else {
          check_keys(g, {"game", "env", "turn_budget", "template"}, "games entry");
          s.game = env::parse_game(g.at("game").get<std::string>());
          if (g.contains("env")) s.env = env::env_config_from_json(g["env"]);
          s.turn_budget = g.value("turn_budget", 0);
          s.template_id = g.value("template", std::string());
        }
        c.games.push_back(std::move(s));
      }
    }
    if (j.contains("backends")) c.backends = specs_from_json(j["backends"], "backends", true);
    if (j.contains("conditions")) {
      c.conditions.clear();
      for (const auto& v : j["conditions"]) c.conditions.push_back(harness::parse_condition(v.get<std::string>()));
    }
    if (j.contains("enriched_perception"))
      c.enriched = perception::parse_mode(j["enriched_perception"].get<std::string>());
    c.max_parse_retries = j.value("max_parse_retries", c.max_parse_retries);
    if (j.contains("fallback")) c.fallback = harness::parse_fallback(j["fallback"].get<std::string>());
    if (j.contains("gen")) c.gen = llm::gen_params_from_json(j["gen"]);
    c.runs = j.value("runs", c.runs);
    if (j.contains("seed")) c.seed = seed_of(j["seed"]);
    c.baseline_runs = j.value("baseline_runs", c.baseline_runs);
    if (j.contains("workers")) {
      if (!j["workers"].is_number_integer() || j["workers"].get<int>() < 1) bad("workers must be >= 1");
      c.workers = j["workers"].get<std::size_t>();
    }
    c.output_dir = j.value("output_dir", c.output_dir);
    c.debug_http = j.value("debug_http", c.debug_http);
    if (j.contains("optimize")) {
      const auto& o = j["optimize"];
      check_keys(o, {"base_template", "train", "dev", "targets", "optimizers", "k", "episodes_per_eval", "minibatch",
                     "condition"},
                 "optimize");
      OptimizeSection s;
      s.base_template = o.at("base_template").get<std::string>();
      s.train = suites_from_json(o.at("train"), "optimize.train");
      s.dev = suites_from_json(o.at("dev"), "optimize.dev");
      s.targets = specs_from_json(o.at("targets"), "optimize.targets");
      s.optimizers = specs_from_json(o.at("optimizers"), "optimize.optimizers");
      s.k = o.value("k", s.k);
      s.episodes_per_eval = o.value("episodes_per_eval", s.episodes_per_eval);
      s.minibatch = o.value("minibatch", s.minibatch);
      if (o.contains("condition")) s.condition = harness::parse_condition(o["condition"].get<std::string>());
      c.optimize = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    bad(std::string("bad run config: ") + e.what());
  }
  validate(c);
  return c;
}

Json to_json(const RunConfig& c) {
  Json games = Json::array();
  for (const auto& g : c.games)
    games.push_back(Json{{"game", env::to_string(g.game)},
                         {"env", env::to_json(g.env)},
                         {"turn_budget", g.turn_budget},
                         {"template", g.template_id}});
  Json conditions = Json::array();
  for (auto cond : c.conditions) conditions.push_back(harness::to_string(cond));
  Json j{{"schema", kRunSchema},
         {"name", c.name},
         {"games", games},
         {"backends", specs_to_json(c.backends)},
         {"conditions", conditions},
         {"enriched_perception", perception::to_string(c.enriched)},
         {"max_parse_retries", c.max_parse_retries},
         {"fallback", harness::to_string(c.fallback)},
         {"gen", llm::to_json(c.gen)},
         {"runs", c.runs},
         {"seed", std::to_string(c.seed)},
         {"baseline_runs", c.baseline_runs},
         {"workers", c.workers},
         {"output_dir", c.output_dir},
         {"debug_http", c.debug_http}};
  if (c.optimize) {
    const auto& o = *c.optimize;
    j["optimize"] = Json{{"base_template", o.base_template},
                         {"train", suites_to_json(o.train)},
                         {"dev", suites_to_json(o.dev)},
                         {"targets", specs_to_json(o.targets)},
                         {"optimizers", specs_to_json(o.optimizers)},
                         {"k", o.k},
                         {"episodes_per_eval", o.episodes_per_eval},
                         {"minibatch", o.minibatch},
                         {"condition", harness::to_string(o.condition)}};
  }
  return j;
}

void validate(const RunConfig& c) {
  if (c.name.empty() || slug(c.name) != c.name) bad("name must be nonempty and use only [A-Za-z0-9._-]");
  if (c.runs < 1) bad("runs must be >= 1");
  if (c.baseline_runs == 1 || c.baseline_runs < 0) bad("baseline_runs must be 0 or >= 2");
  if (c.max_parse_retries < 0) bad("max_parse_retries must be >= 0");
  if (c.conditions.empty()) bad("conditions must not be empty");
  if (!perception::has_text(c.enriched)) bad("enriched_perception must carry text");
  std::set<Condition> conds(c.conditions.begin(), c.conditions.end());
  if (conds.size() != c.conditions.size()) bad("duplicate condition");
  std::set<env::Game> games;
  for (const auto& g : c.games) {
    if (!games.insert(g.game).second) bad(fmt::format("game {} listed twice", env::to_string(g.game)));
    if (g.turn_budget < 0) bad("turn_budget must be >= 0");
    harness::HarnessConfig h;
    h.template_id = g.template_id;
    harness::resolve_template(h, g.game);
  }
  std::set<std::string> names;
  for (const auto& b : c.backends)
    if (!names.insert(b.name).second) bad("duplicate backend name: " + b.name);
  if (c.optimize) {
    const auto& o = *c.optimize;
    const auto base = harness::load_template(o.base_template);
    promptopt::OptimizationConfig oc;
    oc.train = o.train;
    oc.dev = o.dev;
    oc.k = o.k;
    oc.episodes_per_eval = o.episodes_per_eval;
    oc.minibatch = o.minibatch;
    for (const auto& s : o.targets) oc.targets.push_back({s.name, {}});
    for (const auto& s : o.optimizers) oc.optimizers.push_back({s.name, {}});
    promptopt::validate(oc, base.game);
  }
}

void preflight(const std::vector<llm::BackendSpec>& backends) {
  for (const auto& b : backends) llm::make_backend(b, 0);
}

std::uint64_t episode_seed(std::uint64_t master, env::Game game, int run) {
  return derive_seed(derive_seed(master, text::fnv1a(env::to_string(game))), static_cast<std::uint64_t>(run));
}

std::uint64_t backend_seed(std::uint64_t episode_seed, const std::string& backend_name) {
  return derive_seed(episode_seed, text::fnv1a(backend_name));
}

harness::HarnessConfig harness_for(const RunConfig& config, const GameSpec& game, Condition c) {
  auto h = harness::config_for(c, config.enriched);
  h.template_id = game.template_id;
  h.max_parse_retries = config.max_parse_retries;
  h.fallback = config.fallback;
  h.gen = config.gen;
  return h;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::Io, "sha256 failed");
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
  return out;
}

Json to_json(const RunSummary& s) {
  return Json{{"dir", s.dir}, {"config_hash", s.config_hash}, {"episodes", s.episodes}, {"details", s.details}};
}

// ---- eval -------------------------------------------------------------------

RunSummary run_eval(const RunConfig& config) {
  validate(config);
  if (config.games.empty()) bad("no games to run");
  if (config.backends.empty()) bad("no backends to run");
  preflight(config.backends);

  const auto dir = run_dir(config);
  const auto hash = start_run(dir, config);

  for (const auto& g : config.games)
    for (auto c : config.conditions) {
      const auto t = harness::resolve_template(harness_for(config, g, c), g.game);
      write_text(dir / "prompts" / (t.id + ".txt"), harness::serialize(t));
    }

  if (config.baseline_runs > 0)
    for (const auto& g : config.games) {
      const auto b = stats::random_baseline(g.game, g.env, config.baseline_runs,
                                            derive_seed(config.seed, text::fnv1a("baseline")), config.workers);
      auto j = stats::to_json(b);
      j["config_hash"] = hash;
      write_text(dir / "baselines" / (std::string(env::to_string(g.game)) + ".json"), j.dump(2) + "\n");
    }

  struct Job {
    const GameSpec* game;
    const llm::BackendSpec* backend;
    Condition condition;
    int run;
  };
  std::vector<Job> jobs;
  for (const auto& g : config.games)
    for (const auto& b : config.backends)
      for (auto c : config.conditions)
        for (int r = 0; r < config.runs; ++r) jobs.push_back({&g, &b, c, r});

  const auto records = parallel_map(jobs.size(), config.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto seed = episode_seed(config.seed, job.game->game, job.run);
    const auto id = fmt::format("{}-{}-{}-r{}", env::to_string(job.game->game), harness::to_string(job.condition),
                                slug(job.backend->name), job.run);
    auto spec = *job.backend;
    if (config.debug_http && spec.kind == "http") spec.http.debug_dir = (dir / "debug" / id).string();
    auto backend = llm::make_backend(spec, backend_seed(seed, spec.name));
    return harness::run_episode(job.game->game, job.game->env, harness_for(config, *job.game, job.condition), *backend,
                                seed, job.game->turn_budget, id);
  });

  // One file per cell, written in job order by this thread only.
  std::map<std::string, std::string> files;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    const auto file = fmt::format("{}-{}-{}.jsonl", env::to_string(job.game->game), harness::to_string(job.condition),
                                  slug(job.backend->name));
    if (!files.count(file)) order.push_back(file);
    auto j = harness::to_json(records[i]);
    j["config_hash"] = hash;
    files[file] += j.dump() + "\n";
  }
  for (const auto& f : order) write_text(dir / "episodes" / f, files[f]);

  auto summary = write_reports(dir.string());
  summary.episodes = records.size();
  return summary;
}

// ---- reports ----------------------------------------------------------------

RunSummary write_reports(const std::string& dir_name) {
  const fs::path dir(dir_name);
  const auto snapshot = read_text(dir / "config.json");
  const auto hash = sha256_hex(snapshot);
  try {
    run_config_from_json(Json::parse(snapshot));
  } catch (const Json::parse_error& e) {
    bad(std::string("config snapshot is not valid JSON: ") + e.what());
  }

  std::vector<fs::path> episode_files, baseline_files;
  if (fs::exists(dir / "episodes"))
    for (const auto& e : fs::directory_iterator(dir / "episodes"))
      if (e.path().extension() == ".jsonl") episode_files.push_back(e.path());
  if (fs::exists(dir / "baselines"))
    for (const auto& e : fs::directory_iterator(dir / "baselines"))
      if (e.path().extension() == ".json") baseline_files.push_back(e.path());
  std::sort(episode_files.begin(), episode_files.end());
  std::sort(baseline_files.begin(), baseline_files.end());

  std::vector<stats::ScoreRecord> scores;
  for (const auto& f : episode_files)
    for (const auto& line : text::split_lines(read_text(f))) {
      if (text::trim(line).empty()) continue;
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        bad(fmt::format("{}: {}", f.string(), e.what()));
      }
      if (j.value("config_hash", std::string()) != hash)
        throw Error(ErrorCode::KeyMismatch, f.string() + ": record does not belong to this config snapshot");
      const auto rec = harness::episode_from_json(j);
      scores.push_back({rec.id, rec.model, rec.game,
                        rec.condition ? std::string(harness::to_string(*rec.condition)) : std::string("custom"),
                        rec.final_score.reported, config_key(rec)});
    }
  std::vector<stats::BaselineStats> baselines;
  for (const auto& f : baseline_files) baselines.push_back(stats::baseline_from_json(Json::parse(read_text(f))));

  const auto report = stats::summarize(scores, baselines);
  auto rj = stats::to_json(report);
  rj["config_hash"] = hash;
  write_text(dir / "reports" / "summary.csv", stats::to_csv(report));
  write_text(dir / "reports" / "report.json", rj.dump(2) + "\n");
  write_text(dir / "reports" / "report.md", fmt::format("Config snapshot sha256: `{}`\n\n{}", hash, stats::to_markdown(report)));
  write_manifest(dir, hash);

  RunSummary s{dir.string(), hash, scores.size(), Json::object()};
  s.details["reports"] = {"reports/summary.csv", "reports/report.json", "reports/report.md"};
  if (report.delta_summary) s.details["delta_star"] = report.delta_summary->delta_star;
  return s;
}

// ---- optimize ---------------------------------------------------------------

RunSummary run_optimize(const RunConfig& config) {
  validate(config);
  if (!config.optimize) bad("run config has no optimize section");
  const auto& o = *config.optimize;
  preflight(o.targets);
  preflight(o.optimizers);

  const auto base = harness::load_template(o.base_template);
  promptopt::OptimizationConfig oc;
  oc.train = o.train;
  oc.dev = o.dev;
  for (const auto& s : o.targets) oc.targets.push_back(promptopt::model_from_spec(s));
  for (const auto& s : o.optimizers) oc.optimizers.push_back(promptopt::model_from_spec(s));
  oc.k = o.k;
  oc.episodes_per_eval = o.episodes_per_eval;
  oc.minibatch = o.minibatch;
  GameSpec g{base.game, {}, 0, ""};
  oc.harness = harness_for(config, g, o.condition);
  oc.seed = config.seed;
  oc.workers = config.workers;

  const auto dir = run_dir(config);
  const auto hash = start_run(dir, config);
  write_text(dir / "prompts" / (base.id + ".txt"), harness::serialize(base));

  const auto result = promptopt::optimize(oc, base);
  std::string trace = promptopt::to_jsonl(result.trace);
  write_text(dir / "traces" / "optimize.jsonl", trace);
  write_text(dir / "prompts" / (result.best.id + ".txt"), harness::serialize(result.best));

  Json branches = Json::array();
  for (const auto& b : result.trace.branches) {
    auto bj = promptopt::to_json(b);
    bj.erase("template");
    bj.erase("type");
    branches.push_back(bj);
  }
  Json report{{"config_hash", hash},
              {"base_template", base.id},
              {"best_template", result.best.id},
              {"winner", result.trace.winner},
              {"s_best", result.trace.s_best},
              {"branches", branches}};
  write_text(dir / "reports" / "optimize.json", report.dump(2) + "\n");
  write_manifest(dir, hash);

  RunSummary s{dir.string(), hash, 0, Json::object()};
  s.details["best_template"] = result.best.id;
  s.details["winner"] = result.trace.winner;
  s.details["s_best"] = result.trace.s_best;
  s.details["trace"] = "traces/optimize.jsonl";
  return s;
}

}  // namespace gameharness::runner
