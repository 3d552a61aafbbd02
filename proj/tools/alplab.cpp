// alplab command-line entry point.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 bad flags or config, 3 validation
// error, 4 runtime invariant violation, 5 file IO.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "alplab/errors.hpp"
#include "alplab/harness.hpp"
#include "alplab/kernels.hpp"
#include "alplab/plotdata.hpp"

using namespace alplab;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kValidation = 3, kInvariant = 4, kIo = 5 };

// Flag-side mirror of RunConfig; enums stay strings until finalize().
struct RunOptions {
  RunConfig config;
  std::string method = "magellan";
  std::string learner = "qlinear";
  std::string exec = "parallel";
  std::vector<double> proportions{0.80, 0.16, 0.032, 0.007, 0.001};
  std::vector<double> sim_starts{0, 0, 0, 0};
  std::vector<double> sim_rates{4e-4, 3e-4, 2.5e-4, 2e-4};
  std::vector<double> sim_asymptotes{0.98, 0.95, 0.9, 0.85};
  std::string goal_space;
  std::string out;
  std::string seeds;
  std::string config_file;

  RunConfig finalize() const {
    RunConfig c = config;
    c.method = parse_method(method);
    c.learner.kind = parse_learner_kind(learner);
    if (exec == "parallel") c.estimator.exec = Exec::Parallel;
    else if (exec == "serial") c.estimator.exec = Exec::Serial;
    else throw ConfigError(fmt::format("unknown exec mode '{}'", exec));
    c.goal_space = goal_space;
    std::copy(proportions.begin(), proportions.end(), c.generation.proportions.begin());
    for (int i = 0; i < 4; ++i)
      c.learner.schedule.ramps[i + 1] = Ramp{sim_starts[i], sim_rates[i], sim_asymptotes[i]};
    c.validate();
    return c;
  }
};

void add_run_options(CLI::App& app, RunOptions& o, bool with_seeds) {
  RunConfig& c = o.config;
  app.add_option("--config", o.config_file, "Flat key = value config file; flags override it")
      ->configurable(false);

  app.add_option("--out", o.out, "Output directory")->required()->configurable(false);
  app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
  if (with_seeds)
    app.add_option("--seeds", o.seeds, "Seed range a..b, one child process per seed")
        ->configurable(false);

  app.add_option("--goal-space", o.goal_space, "Goal space JSONL; generated when absent");
  app.add_option("--train-goals", c.generation.train_goals, "Generated training goals")
      ->capture_default_str();
  app.add_option("--test-goals", c.generation.test_goals, "Generated held-out goals")
      ->capture_default_str();
  app.add_option("--goal-seed", c.generation.seed, "Goal generation seed")->capture_default_str();
  app.add_option("--proportions", o.proportions,
                 "Category shares impossible, grasp, grow_plant, grow_herbivore, grow_carnivore "
                 "[goal repartition]")
      ->expected(5)
      ->capture_default_str();

  app.add_option("--estimator", o.method, "mb|online|eval|ek-online|ek-eval|magellan|uniform")
      ->check(CLI::IsMember({"mb", "online", "eval", "ek-online", "ek-eval", "magellan", "uniform"}))
      ->capture_default_str();
  app.add_option("--learner", o.learner, "expert|simulated|qlinear")
      ->check(CLI::IsMember({"expert", "simulated", "qlinear"}))
      ->capture_default_str();
  app.add_option("--episodes", c.episodes, "Training episodes")->capture_default_str();
  app.add_option("--eval-every", c.eval_every, "Success-rate sweep cadence")->capture_default_str();
  app.add_option("--eval-goals", c.eval_goals, "Sweep goals per category")->capture_default_str();
  app.add_option("--test-sweeps", c.test_sweeps, "Also sweep held-out goals")->capture_default_str();
  app.add_option("--shadows", c.shadows, "Track online and ek-online alongside the method")
      ->capture_default_str();
  app.add_option("--checkpoints", c.checkpoints, "Write final checkpoints")->capture_default_str();
  app.add_option("--latents", c.latents, "Write latents.csv")->capture_default_str();
  app.add_option("--exec", o.exec, "parallel|serial kernels")->capture_default_str();

  auto& e = c.estimator;
  app.add_option("--mb-history", e.mb_history, "N [moving average LP]")->capture_default_str();
  app.add_option("--mb-alpha", e.mb_alpha, "alpha [moving average LP]")->capture_default_str();
  app.add_option("--online-buffer", e.online_buffer, "Buffer size [Online methods hyperparameters]")
      ->capture_default_str();
  app.add_option("--eval-frequency", e.eval_frequency,
                 "Episodes between evaluations [Eval methods hyperparameters]")
      ->capture_default_str();
  app.add_option("--eval-per-goal", e.eval_per_goal,
                 "Evaluations per goal, eval [Eval methods hyperparameters]")
      ->capture_default_str();
  app.add_option("--eval-per-bucket", e.eval_per_bucket,
                 "Evaluations per bucket, ek-eval [Eval methods hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-buffer", e.magellan_data_capacity,
                 "Size of D [MAGELLAN hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-snapshots", e.magellan_snapshot_capacity,
                 "Size of B [MAGELLAN hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-update-period", e.magellan_update_period,
                 "Episodes between updates [MAGELLAN hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-batch", e.magellan_batch_size, "Batch size [MAGELLAN hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-lr", e.magellan_learning_rate,
                 "Adam learning rate [MAGELLAN hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-steps", e.magellan_steps_per_update, "Gradient steps per update")
      ->capture_default_str();
  app.add_option("--magellan-embed-dim", e.magellan_embed_dim, "Token embedding width")
      ->capture_default_str();
  app.add_option("--magellan-hidden", e.magellan_hidden, "Head width [MAGELLAN hyperparameters]")
      ->capture_default_str();
  app.add_option("--magellan-init-scale", e.magellan_init_scale, "Uniform init half-width")
      ->capture_default_str();

  auto& s = c.selector;
  app.add_option("--epsilon-start", s.epsilon_start, "Initial selector exploration")
      ->capture_default_str();
  app.add_option("--epsilon-end", s.epsilon_end, "Final selector exploration")->capture_default_str();
  app.add_option("--epsilon-horizon", s.decay_horizon, "Episodes of linear decay")
      ->capture_default_str();

  auto& q = c.learner.q;
  app.add_option("--q-lr", q.learning_rate, "Q learning rate")->capture_default_str();
  app.add_option("--q-discount", q.discount, "Discount factor [SAC hyperparameters]")
      ->capture_default_str();
  app.add_option("--q-nstep", q.n_step, "n-step return [SAC hyperparameters]")->capture_default_str();
  app.add_option("--q-exploration", q.exploration, "Behaviour epsilon")->capture_default_str();
  app.add_option("--q-hash-bits", q.hash_bits, "log2 of the weight table size")
      ->capture_default_str();

  app.add_option("--sim-starts", o.sim_starts, "Ramp starts, feasible categories in order")
      ->expected(4)
      ->capture_default_str();
  app.add_option("--sim-rates", o.sim_rates, "Ramp rates")->expected(4)->capture_default_str();
  app.add_option("--sim-asymptotes", o.sim_asymptotes, "Ramp asymptotes")
      ->expected(4)
      ->capture_default_str();
  app.add_option("--sim-gated", c.learner.schedule.gated, "Gate each ramp on the previous one")
      ->capture_default_str();
  app.add_option("--sim-gate", c.learner.schedule.gate_threshold, "Gate threshold")
      ->capture_default_str();
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
  static const std::regex re(R"((\d+)\.\.(\d+))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw ConfigError(fmt::format("bad seed range '{}'", text));
  const auto a = std::stoull(m[1]), b = std::stoull(m[2]);
  if (b < a) throw ConfigError(fmt::format("empty seed range '{}'", text));
  return {a, b};
}

// Reruns this executable once per seed, at most one child per hardware thread.
int fan_out(int argc, char** argv, const RunOptions& o) {
  const auto [lo, hi] = parse_seed_range(o.seeds);
  std::vector<std::string> base;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--seeds" || a == "--seed" || a == "--out") {
      ++i;
      continue;
    }
    if (a.rfind("--seeds=", 0) == 0 || a.rfind("--seed=", 0) == 0 || a.rfind("--out=", 0) == 0)
      continue;
    base.push_back(a);
  }
  const unsigned width = std::max(1u, std::thread::hardware_concurrency());
  std::map<pid_t, std::uint64_t> running;
  int worst = kOk;
  auto reap = [&] {
    int status = 0;
    const pid_t pid = wait(&status);
    if (pid <= 0) return;
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : kOther;
    if (code != kOk) fmt::print(stderr, "seed {} exited with {}\n", running[pid], code);
    worst = std::max(worst, code);
    running.erase(pid);
  };
  for (auto seed = lo; seed <= hi; ++seed) {
    while (running.size() >= width) reap();
    std::vector<std::string> args{argv[0]};
    args.insert(args.end(), base.begin(), base.end());
    args.insert(args.end(), {"--seed", std::to_string(seed), "--out",
                             (std::filesystem::path(o.out) / fmt::format("seed-{}", seed)).string()});
    std::vector<char*> cargs;
    for (auto& a : args) cargs.push_back(a.data());
    cargs.push_back(nullptr);
    const pid_t pid = fork();
    if (pid < 0) throw IoError("fork failed");
    if (pid == 0) {
      execv("/proc/self/exe", cargs.data());
      _exit(kOther);
    }
    running[pid] = seed;
  }
  while (!running.empty()) reap();
  fmt::print("{} seeds {}..{} under {} status={}\n", argv[1], lo, hi, o.out, worst);
  return worst;
}

// CLI11 only reads config files for the top-level app, so subcommands load
// theirs here. Flags given on the command line win over the file.
void apply_config_file(CLI::App& app, const std::string& path) {
  if (path.empty()) return;
  if (!std::filesystem::is_regular_file(path)) throw IoError(fmt::format("cannot read {}", path));
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  for (const auto& item : items) {
    const bool top = item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == "default");
    CLI::Option* opt = top ? app.get_option_no_throw("--" + item.name) : nullptr;
    if (opt == nullptr || !opt->get_configurable())
      throw ConfigError(fmt::format("{}: unknown config key '{}'", path, item.fullname()));
    if (opt->count() > 0) continue;
    try {
      opt->add_result(item.inputs);
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(fmt::format("{}: {}: {}", path, item.name, e.what()));
    }
  }
}

void write_effective_config(const CLI::App& app, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream f(dir / "config.toml");
  if (!f) throw IoError(fmt::format("cannot write {}", (dir / "config.toml").string()));
  // Unset vector options come out as quoted "[a,b]" strings; write them as arrays.
  static const std::regex quoted_list(R"re(^([\w-]+)="\[(.*)\]"$)re");
  std::istringstream in(app.config_to_str(true, false));
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, quoted_list))
      line = fmt::format("{}=[{}]", m[1].str(), std::regex_replace(m[2].str(), std::regex(","), ", "));
    f << line << '\n';
  }
}

RunConfig config_from_run_dir(const std::filesystem::path& dir) {
  CLI::App app;
  RunOptions o;
  add_run_options(app, o, false);
  const auto cfg = (dir / "config.toml").string();
  const auto out = dir.string();
  std::vector<std::string> args{out, "--out"};  // reverse order for parse()
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    throw ConfigError(fmt::format("{}: {}", cfg, e.what()));
  }
  apply_config_file(app, cfg);
  RunConfig c = o.finalize();
  c.goal_space = dir / "goals.jsonl";
  return c;
}

void cmd_generate(const GenerationConfig& g, const std::string& out) {
  const GoalSpace space = generate(g, Vocabulary::default_vocabulary());
  space.validate();
  save(space, out);
  std::array<std::size_t, kCategoryCount> counts{};
  for (const auto& goal : space.goals()) ++counts[category_index(goal.category)];
  std::vector<std::string> parts;
  for (auto c : kAllCategories) parts.push_back(fmt::format("{}={}", to_string(c), counts[category_index(c)]));
  fmt::print("generated {} goals -> {} {}\n", space.size(), out, fmt::join(parts, " "));
}

void cmd_validate(const std::string& path, int bfs_checks, bool full, std::uint64_t seed) {
  const GoalSpace space = load(path);
  space.validate();
  std::size_t checked = 0;
  if (full) {
    const auto bad = classify_bfs_mismatches(space, Exec::Parallel);
    if (!bad.empty())
      throw ValidationError(fmt::format("{} goals disagree with the exhaustive search, first {}",
                                        bad.size(), bad.front()));
    checked = space.size();
  } else {
    Rng rng(seed);
    for (int i = 0; i < bfs_checks && space.size() > 0; ++i) {
      const auto id = static_cast<GoalId>(uniform_index(rng, space.size()));
      const Goal& g = space.goal(id);
      if (feasible_bfs(g).feasible != g.feasible)
        throw ValidationError(fmt::format("goal {} disagrees with the exhaustive search", id));
      ++checked;
    }
  }
  fmt::print("valid {} goals={} bfs_checked={}\n", path, space.size(), checked);
}

void cmd_run(const RunOptions& o) {
  const RunConfig c = o.finalize();
  const auto sweeps = run_training(c, o.out);
  const auto m = mastery(sweeps);
  std::vector<std::string> parts;
  for (auto cat : kFeasibleCategories) {
    const auto& v = m.first[category_index(cat)];
    parts.push_back(fmt::format("{}={}", to_string(cat), v ? std::to_string(*v) : "-"));
  }
  fmt::print("run {} seed={} episodes={} mastery {} -> {}\n", to_string(c.method), c.seed,
             c.episodes, fmt::join(parts, " "), o.out);
}

void cmd_benchmark(const RunOptions& o, const std::vector<std::string>& kinds,
                   std::int64_t error_every) {
  BenchmarkConfig b;
  b.run = o.finalize();
  b.error_every = error_every;
  b.estimators.clear();
  for (const auto& k : kinds) b.estimators.push_back(parse_estimator_kind(k));
  const auto space = load_or_generate(b.run);
  const auto records = estimator_benchmark(b, *space);
  std::filesystem::create_directories(o.out);
  std::ofstream f(std::filesystem::path(o.out) / "benchmark.csv");
  if (!f) throw IoError("cannot write benchmark.csv");
  write_benchmark_csv(f, records, space->ids(Split::Train).size());

  std::map<std::string, std::pair<double, int>> mean_macro;
  for (const auto& r : records) {
    auto& [sum, n] = mean_macro[std::string(to_string(r.estimator))];
    sum += r.error.macro;
    ++n;
  }
  std::vector<std::string> parts;
  for (const auto& [k, v] : mean_macro) parts.push_back(fmt::format("{}={:.3f}", k, v.first / v.second));
  fmt::print("benchmark goals={} episodes={} mean_macro_error {} -> {}\n",
             space->ids(Split::Train).size(), b.run.episodes, fmt::join(parts, " "), o.out);
}

void cmd_generalization(const std::vector<std::string>& dirs, const std::string& out) {
  json all = json::array();
  for (const auto& d : dirs) {
    const auto records = read_generalization_csv(std::filesystem::path(d) / "generalization.csv");
    const auto report = generalization_report(records);
    json j = json::array();
    std::vector<std::string> parts;
    for (const auto& s : report) {
      json e{{"estimator", s.estimator}, {"macro", s.macro}};
      for (auto c : kAllCategories)
        if (s.present[category_index(c)])
          e["categories"][std::string(to_string(c))] = {{"error", s.error[category_index(c)]},
                                                         {"sr", s.sr[category_index(c)]}};
      j.push_back(e);
      parts.push_back(fmt::format("{}={:.3f}", s.estimator, s.macro));
    }
    std::ofstream f(std::filesystem::path(d) / "generalization.json");
    if (!f) throw IoError(fmt::format("cannot write {}/generalization.json", d));
    f << j.dump(2) << '\n';
    all.push_back({{"run", d}, {"report", j}});
    fmt::print("generalization {} macro_error {}\n", d, fmt::join(parts, " "));
  }
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError(fmt::format("cannot write {}", out));
    f << all.dump(2) << '\n';
  }
}

void cmd_adaptation(const RunOptions& o, const std::vector<std::int64_t>& points,
                    std::int64_t continuation, const std::vector<std::string>& methods,
                    const std::vector<std::int64_t>& kappas) {
  AdaptationConfig a;
  a.base = o.finalize();
  a.swap_points = points;
  a.continuation = continuation;
  a.kappas = kappas;
  a.methods.clear();
  for (const auto& m : methods) a.methods.push_back(parse_method(m));
  const auto arms = adaptation_test(a);

  const std::filesystem::path dir = o.out;
  std::filesystem::create_directories(dir);
  std::ofstream curves(dir / "adaptation_sr.csv");
  std::ofstream eff(dir / "sample_efficiency.csv");
  if (!curves || !eff) throw IoError("cannot write adaptation outputs");
  curves << "swap_point,method,episode,category,sr,n_goals\n";
  eff << "swap_point,method,kappa,efficiency\n";
  std::map<std::string, double> at_max;
  for (const auto& arm : arms) {
    for (const auto& s : arm.sweeps)
      fmt::print(curves, "{},{},{},{},{},{}\n", arm.swap_point, to_string(arm.method), s.episode,
                 to_string(s.category), std::isnan(s.sr) ? "" : fmt::format("{:.6g}", s.sr),
                 s.n_goals);
    for (std::size_t k = 0; k < a.kappas.size(); ++k)
      fmt::print(eff, "{},{},{},{:.6g}\n", arm.swap_point, to_string(arm.method), a.kappas[k],
                 arm.efficiency[k]);
    at_max[to_string(arm.method)] += arm.efficiency.back() / static_cast<double>(points.size());
  }
  std::vector<std::string> parts;
  for (const auto& [m, v] : at_max) parts.push_back(fmt::format("{}={:.1f}", m, v));
  fmt::print("adaptation seed={} kappa={} mean_efficiency {} -> {}\n", a.base.seed, a.kappas.back(),
             fmt::join(parts, " "), o.out);
}

void cmd_export_latents(const std::string& run_dir, const std::string& out, const std::string& split) {
  const RunConfig c = config_from_run_dir(run_dir);
  if (c.method.uniform) throw ConfigError("uniform runs have no estimator to export");
  const GoalSpace space = load(c.goal_space);
  auto catalog = GoalCatalog::build(space);
  const auto pool = space.ids(Split::Train);
  EstimatorConfig ec = c.estimator;
  ec.kind = c.method.estimator;
  ec.seed = derive_seed(c.seed, "estimator");
  auto est = make_estimator(ec, catalog, pool);
  est->load_checkpoint(std::filesystem::path(run_dir) / "checkpoints" / "estimator");

  std::vector<GoalId> goals;
  if (split == "all") {
    goals.resize(space.size());
    std::iota(goals.begin(), goals.end(), 0);
  } else {
    goals = space.ids(split == "train" ? Split::Train : Split::Test);
  }
  std::ofstream f(out);
  if (!f) throw IoError(fmt::format("cannot write {}", out));
  export_latents(*est, space, goals, f);
  fmt::print("exported {} rows from {} -> {}\n", goals.size(), run_dir, out);
}

void cmd_plot(const std::vector<std::string>& dirs, const std::string& metric, const std::string& out) {
  std::vector<PlotRun> runs;
  for (const auto& d : dirs) runs.push_back(load_plot_run(d));
  std::ofstream f(out);
  if (!f) throw IoError(fmt::format("cannot write {}", out));
  emit_plot_data(runs, metric, f);
  fmt::print("plot-data {} runs metric={} -> {}\n", runs.size(), metric, out);
}

void error_line(const char* kind, const std::string& message, int code) {
  fmt::print(stderr, "{}\n", json{{"error", kind}, {"message", message}, {"exit", code}}.dump());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-progress curricula on the Little-Zoo goal space"};
  app.require_subcommand(1);

  GenerationConfig gen;
  std::string gen_out;
  std::vector<double> gen_props{0.80, 0.16, 0.032, 0.007, 0.001};
  auto* g = app.add_subcommand("generate-goals", "Generate a train/test goal space");
  g->add_option("--total", gen.train_goals, "Training goals")->capture_default_str();
  g->add_option("--test", gen.test_goals, "Held-out goals")->capture_default_str();
  g->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
  g->add_option("--proportions", gen_props, "Category shares [goal repartition]")
      ->expected(5)
      ->capture_default_str();
  g->add_option("--out", gen_out, "Output JSONL")->required();

  std::string val_path;
  int val_checks = 200;
  bool val_full = false;
  std::uint64_t val_seed = 0;
  auto* v = app.add_subcommand("validate", "Check a goal space file");
  v->add_option("path", val_path, "Goal space JSONL")->required();
  v->add_option("--bfs-checks", val_checks, "Random goals checked by exhaustive search")
      ->capture_default_str();
  v->add_flag("--full", val_full, "Search every goal");
  v->add_option("--seed", val_seed, "Spot-check seed")->capture_default_str();

  RunOptions run_opts;
  auto* r = app.add_subcommand("run", "Curriculum training run");
  add_run_options(*r, run_opts, true);

  RunOptions bench_opts;
  bench_opts.learner = "simulated";
  bench_opts.method = "ek-eval";
  bench_opts.config.episodes = 50'000;
  std::vector<std::string> bench_kinds{"mb", "online", "eval", "ek-online", "ek-eval", "magellan"};
  std::int64_t error_every = 1'000;
  auto* b = app.add_subcommand("benchmark-estimators",
                               "Competence error and evaluation cost against a simulated learner");
  add_run_options(*b, bench_opts, true);
  b->add_option("--estimators", bench_kinds, "Estimators observing the stream")->capture_default_str();
  b->add_option("--error-every", error_every, "Episodes between error measurements")
      ->capture_default_str();

  std::vector<std::string> gen_dirs;
  std::string gen_report_out;
  auto* gr = app.add_subcommand("generalization-report", "Held-out competence error of finished runs");
  gr->add_option("runs", gen_dirs, "Run directories")->required();
  gr->add_option("--out", gen_report_out, "Combined JSON report");

  RunOptions adapt_opts;
  std::vector<std::int64_t> swap_points{50'000, 100'000, 150'000};
  std::int64_t continuation = 50'000;
  std::vector<std::string> adapt_methods{"magellan", "ek-online", "online", "uniform"};
  std::vector<std::int64_t> kappas{10'000, 20'000, 30'000, 40'000, 50'000};
  auto* a = app.add_subcommand("adaptation-test", "Swap to held-out goals and score recovery");
  add_run_options(*a, adapt_opts, true);
  a->add_option("--swap-points", swap_points, "Base-run episodes at which goals are swapped")
      ->capture_default_str();
  a->add_option("--continuation", continuation, "Episodes after each swap")->capture_default_str();
  a->add_option("--methods", adapt_methods, "Methods continuing after the swap")->capture_default_str();
  a->add_option("--kappas", kappas, "Sample-efficiency horizons")->capture_default_str();

  std::string lat_run, lat_out, lat_split = "all";
  auto* l = app.add_subcommand("export-latents", "Latent vectors and predictions of a run's estimator");
  l->add_option("run", lat_run, "Run directory")->required();
  l->add_option("--out", lat_out, "Output CSV")->required();
  l->add_option("--split", lat_split, "all|train|test")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();

  std::vector<std::string> plot_dirs;
  std::string plot_metric = "sr", plot_out;
  auto* p = app.add_subcommand("plot-data", "Long-format curves with per-method mean and std");
  p->add_option("runs", plot_dirs, "Run directories")->required();
  p->add_option("--metric", plot_metric, "sr|estimator_competence|reference_competence|cumulative_cost")
      ->capture_default_str();
  p->add_option("--out", plot_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_line("usage", e.what(), kConfig);
    return kConfig;
  }

  try {
    if (*g) {
      std::copy(gen_props.begin(), gen_props.end(), gen.proportions.begin());
      cmd_generate(gen, gen_out);
    } else if (*v) {
      cmd_validate(val_path, val_checks, val_full, val_seed);
    } else if (*r || *b || *a) {
      auto* sub = *r ? r : (*b ? b : a);
      RunOptions& o = *r ? run_opts : (*b ? bench_opts : adapt_opts);
      if (!o.seeds.empty()) return fan_out(argc, argv, o);
      apply_config_file(*sub, o.config_file);
      o.finalize();
      write_effective_config(*sub, o.out);
      if (*r) cmd_run(o);
      else if (*b) cmd_benchmark(o, bench_kinds, error_every);
      else cmd_adaptation(o, swap_points, continuation, adapt_methods, kappas);
    } else if (*gr) {
      cmd_generalization(gen_dirs, gen_report_out);
    } else if (*l) {
      cmd_export_latents(lat_run, lat_out, lat_split);
    } else if (*p) {
      cmd_plot(plot_dirs, plot_metric, plot_out);
    }
  } catch (const ConfigError& e) {
    error_line("config", e.what(), kConfig);
    return kConfig;
  } catch (const ValidationError& e) {
    error_line("validation", e.what(), kValidation);
    return kValidation;
  } catch (const InvariantError& e) {
    error_line("invariant", e.what(), kInvariant);
    return kInvariant;
  } catch (const IoError& e) {
    error_line("io", e.what(), kIo);
    return kIo;
  } catch (const std::exception& e) {
    error_line("internal", e.what(), kOther);
    return kOther;
  }
  return kOk;
}
