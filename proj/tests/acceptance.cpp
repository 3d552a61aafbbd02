// Acceptance checks, one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "alplab/curriculum.hpp"
#include "alplab/estimators.hpp"
#include "alplab/goalspace.hpp"
#include "alplab/harness.hpp"
#include "alplab/kernels.hpp"
#include "alplab/learners.hpp"
#include "alplab/stats.hpp"
#include "alplab/tinynet.hpp"

using namespace alplab;

namespace {

struct Outcome {
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const Vocabulary& vocab() {
  static const Vocabulary v = Vocabulary::default_vocabulary();
  return v;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("alplab-acceptance-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Estimator settings used by the desk-scale experiments.
void tune_magellan(EstimatorConfig& e) {
  e.magellan_learning_rate = 3e-3;
  e.magellan_steps_per_update = 4;
}

// --- 1 ---------------------------------------------------------------------

Outcome combinatorics() {
  const auto t0 = Clock::now();
  const auto n = total_goal_count(vocab());
  const double ms = seconds_since(t0) * 1e3;
  return {n == 19'531'250 && ms < 1.0, fmt::format("total={} in {:.3f} ms", n, ms), {}};
}

// --- 2 ---------------------------------------------------------------------

Outcome trajectory_lengths() {
  const auto t0 = Clock::now();
  const GoalSpace space = generate(GenerationConfig{500, 0, {0.2, 0.2, 0.2, 0.2, 0.2}, 2}, vocab());
  const std::array<int, kCategoryCount> minimal{0, 2, 4, 7, 10}, budget{0, 3, 6, 11, 15};
  bool ok = true;
  std::vector<std::string> details;
  ExpertLearner expert;
  for (auto c : kAllCategories) {
    if (c == Category::Impossible) continue;
    const int ci = category_index(c);
    ok &= minimal_steps(c) == minimal[ci] && step_budget(c) == budget[ci];
    const auto ids = space.ids(Split::Train, c);
    int bad = 0;
    for (GoalId id : ids) {
      const Goal& g = space.goal(id);
      Rng rng(static_cast<std::uint64_t>(id));
      const auto t = expert.rollout(g, rng, true);
      const auto bfs = feasible_bfs(g);
      if (!t.succeeded || static_cast<int>(t.steps.size()) != minimal[ci] || reset(g).step_budget != budget[ci] ||
          !bfs.depth || *bfs.depth != minimal[ci])
        ++bad;
    }
    ok &= bad == 0 && ids.size() == 100;
    details.push_back(fmt::format("{}: {} goals, {} mismatches", to_string(c), ids.size(), bad));
  }
  const double s = seconds_since(t0);
  ok &= s < 60;
  return {ok, fmt::format("expert = BFS = 2/4/7/10 steps, budgets 3/6/11/15, {:.1f} s", s), details};
}

// --- 3 ---------------------------------------------------------------------

Outcome feasibility_oracle() {
  const GoalSpace space = generate(GenerationConfig{25'000, 0, {0.80, 0.16, 0.032, 0.007, 0.001}, 3}, vocab());
  const auto t0 = Clock::now();
  const auto mismatches = classify_bfs_mismatches(space, Exec::Serial);
  const double s = seconds_since(t0);
  return {mismatches.empty() && s < 1800,
          fmt::format("{} goals, {} mismatches, {:.1f} s single-threaded", space.size(), mismatches.size(), s),
          {}};
}

// --- 4 ---------------------------------------------------------------------

Outcome micro_correctness() {
  const auto t0 = Clock::now();
  std::vector<std::string> details;
  bool ok = true;

  const std::vector<std::uint8_t> hist{1, 0};
  const double mb = MbEstimator::update_utility(0.2, hist, 1, 0.3);
  ok &= std::abs(mb - 0.41) < 1e-12;
  details.push_back(fmt::format("mb utility {:.15f}", mb));

  OutcomeBuffer b(100);
  for (int i = 0; i < 50; ++i) b.push(0);
  for (int i = 0; i < 50; ++i) b.push(1);
  OutcomeBuffer ones(100);
  for (int i = 0; i < 30; ++i) ones.push(1);
  OutcomeBuffer odd(100);
  for (int o : {1, 0, 0, 1, 1}) odd.push(o);  // oldest {1,0}, newest {0,1,1}
  const bool halves = b.alp() == 1.0 && b.recent_mean() == 1.0 && ones.alp() == 0.0 &&
                      ones.recent_mean() == 1.0 && std::abs(odd.alp() - (2.0 / 3 - 0.5)) < 1e-15;
  ok &= halves;
  details.push_back(fmt::format("online halves exact: {}", halves));

  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const NetShape shape{static_cast<int>(rng() % 8) + 3, static_cast<int>(rng() % 6) + 2,
                         static_cast<int>(rng() % 7) + 2};
    const CompetenceNet net(shape);
    ParamStore p = net.make_params(rng(), 0.8);
    std::vector<int> tokens(rng() % 6 + 1);
    for (auto& t : tokens) t = static_cast<int>(rng() % static_cast<std::uint64_t>(shape.vocab));
    const int y = static_cast<int>(rng() % 2);
    std::vector<double> grad(p.size(), 0.0);
    net.accumulate_gradient(p, tokens, y, 1.0, grad);
    auto values = p.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double h = 1e-6, keep = values[i];
      values[i] = keep + h;
      const double up = bce_with_logit(net.logit(p, tokens), y);
      values[i] = keep - h;
      const double down = bce_with_logit(net.logit(p, tokens), y);
      values[i] = keep;
      const double fd = (up - down) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[i]), 1e-5});
      worst = std::max(worst, std::abs(fd - grad[i]) / scale);
    }
  }
  ok &= worst < 1e-4;
  details.push_back(fmt::format("worst relative gradient error {:.2e} over 100 configurations", worst));

  const CompetenceNet net(NetShape{40, 64, 128});
  const ParamStore p = net.make_params(7);
  const ParamStore q = restore(decode_snapshot(encode_snapshot(snapshot(p, 3))));
  const bool exact = p.size() == q.size() &&
                     std::memcmp(p.values().data(), q.values().data(), p.size() * sizeof(double)) == 0;
  ok &= exact;
  details.push_back(fmt::format("snapshot restore bit-exact: {}", exact));

  const double s = seconds_since(t0);
  ok &= s < 60;
  return {ok, fmt::format("{:.1f} s", s), details};
}

// --- 5 ---------------------------------------------------------------------

Outcome q1_benchmark() {
  bool ok = true;
  std::vector<std::string> details;
  const ScheduleConfig schedule;
  const CompetenceSchedule sched(schedule);
  // Earliest thousand-episode mark where every feasible category is within
  // 0.01 of its asymptote.
  std::int64_t converged = 0;
  for (std::int64_t t = 0; t <= 50'000; t += 1000) {
    bool all = true;
    for (int c = 1; c < kCategoryCount; ++c)
      all &= schedule.ramps[c].asymptote - sched.probability(kAllCategories[c], static_cast<double>(t)) < 0.01;
    if (all) {
      converged = t;
      break;
    }
  }
  details.push_back(fmt::format("schedule converged by episode {}", converged));

  int wins = 0;
  const int seeds = 5;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto t0 = Clock::now();
    BenchmarkConfig b;
    b.run.generation = GenerationConfig{25'000, 0, {0.80, 0.16, 0.032, 0.007, 0.001},
                                        static_cast<std::uint64_t>(seed)};
    b.run.learner.kind = LearnerKind::Simulated;
    b.run.learner.schedule = schedule;
    b.run.method = Method{false, EstimatorKind::EkEval};
    b.run.episodes = 50'000;
    b.run.seed = static_cast<std::uint64_t>(seed);
    tune_magellan(b.run.estimator);
    b.error_every = 1000;
    const auto space = load_or_generate(b.run);
    const auto recs = estimator_benchmark(b, *space);

    std::map<EstimatorKind, std::vector<double>> macro, after;
    std::map<EstimatorKind, std::int64_t> cost;
    bool ek_exact = true;
    for (const auto& r : recs) {
      macro[r.estimator].push_back(r.error.macro);
      if (r.episode >= converged) after[r.estimator].push_back(r.error.macro);
      cost[r.estimator] = r.cumulative_cost;
      if (r.estimator == EstimatorKind::EkEval) ek_exact &= r.cumulative_cost == r.episode / 1000 * 10'240;
    }
    const bool costs = cost[EstimatorKind::Magellan] == 0 && cost[EstimatorKind::Online] == 0 && ek_exact;
    const double mag = mean(macro[EstimatorKind::Magellan]), onl = mean(macro[EstimatorKind::Online]);
    const double mag_after = mean(after[EstimatorKind::Magellan]);
    wins += mag < onl;
    ok &= costs && mag < onl && mag_after < 0.15;
    std::vector<std::string> per;
    for (const auto& [k, v] : macro)
      per.push_back(fmt::format("{}={:.3f}", to_string(k), mean(v)));
    details.push_back(fmt::format(
        "seed {}: mean macro error {} | magellan after convergence {:.3f} | costs magellan={} online={} "
        "ek-eval={} eval={} | {:.0f} s",
        seed, fmt::join(per, " "), mag_after, cost[EstimatorKind::Magellan], cost[EstimatorKind::Online],
        cost[EstimatorKind::EkEval], cost[EstimatorKind::Eval], seconds_since(t0)));
  }
  return {ok, fmt::format("magellan below online in {}/{} seeds", wins, seeds), details};
}

// --- 6, 7 ------------------------------------------------------------------

RunConfig q2_config(Method method, std::uint64_t seed) {
  RunConfig c;
  c.generation = GenerationConfig{2000, 1000, {0.80, 0.16, 0.032, 0.007, 0.001}, seed};
  c.method = method;
  c.learner.kind = LearnerKind::QLinear;
  c.episodes = 100'000;
  c.eval_every = 5000;
  c.eval_goals = 64;
  c.seed = seed;
  c.test_sweeps = !method.uniform;
  c.checkpoints = false;
  c.latents = false;
  tune_magellan(c.estimator);
  return c;
}

struct Q2Seed {
  MasteryReport magellan, uniform;
  std::vector<GeneralizationRecord> generalization;
};

const std::vector<Q2Seed>& q2_runs() {
  static const std::vector<Q2Seed> runs = [] {
    std::vector<Q2Seed> out;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto t0 = Clock::now();
      Q2Seed s;
      const auto mc = q2_config(Method{false, EstimatorKind::Magellan}, seed);
      const auto space = load_or_generate(mc);
      TrainingRun m(mc, space);
      m.advance_to(mc.episodes);
      s.magellan = mastery(m.sweeps());
      s.generalization = m.generalization();
      TrainingRun u(q2_config(Method{true, {}}, seed), space);
      u.advance_to(mc.episodes);
      s.uniform = mastery(u.sweeps());
      fmt::print("  [q2 seed {} done in {:.0f} s]\n", seed, seconds_since(t0));
      std::fflush(stdout);
      out.push_back(std::move(s));
    }
    return out;
  }();
  return runs;
}

std::string fmt_mastery(const MasteryReport& r) {
  std::vector<std::string> v;
  for (auto c : {Category::Grasp, Category::GrowPlant, Category::GrowHerbivore, Category::GrowCarnivore}) {
    const auto& m = r.first[category_index(c)];
    v.push_back(m ? std::to_string(*m) : "-");
  }
  return fmt::format("{}", fmt::join(v, "/"));
}

Outcome q2_curriculum() {
  const auto& runs = q2_runs();
  const std::int64_t episodes = 100'000, cadence = 5000;
  std::vector<std::string> details;
  int ordered = 0;
  std::map<Category, std::pair<std::vector<double>, std::vector<double>>> censored;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto& m = runs[s].magellan;
    const auto cm = [&](const MasteryReport& r, Category c) {
      return static_cast<double>(censored_mastery(r, c, episodes, cadence));
    };
    const double g = cm(m, Category::Grasp), p = cm(m, Category::GrowPlant), h = cm(m, Category::GrowHerbivore);
    const bool in_order = m.first[category_index(Category::GrowHerbivore)].has_value() && g <= p && p <= h;
    ordered += in_order;
    for (auto c : {Category::GrowPlant, Category::GrowHerbivore}) {
      censored[c].first.push_back(cm(runs[s].uniform, c));
      censored[c].second.push_back(cm(m, c));
    }
    details.push_back(fmt::format("seed {}: mastery grasp/plant/herb/carn magellan {} uniform {}{}", s,
                                  fmt_mastery(m), fmt_mastery(runs[s].uniform), in_order ? "" : " (out of order)"));
  }
  bool ok = ordered == static_cast<int>(runs.size());
  std::vector<std::string> tests;
  for (auto c : {Category::GrowPlant, Category::GrowHerbivore}) {
    const auto w = wilcoxon_greater(censored[c].first, censored[c].second);
    ok &= w.p_value < 0.05;
    tests.push_back(fmt::format("{} p={:.4f} (n={}, W+={})", to_string(c), w.p_value, w.n, w.w_plus));
  }
  details.push_back(fmt::format("uniform later than magellan, one-sided signed-rank: {}", fmt::join(tests, ", ")));
  return {ok, fmt::format("ordered in {}/{} seeds; {}", ordered, runs.size(), fmt::join(tests, ", ")), details};
}

Outcome q3_generalization() {
  const auto& runs = q2_runs();
  bool ok = true;
  int wins = 0;
  std::vector<std::string> details;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const auto report = generalization_report(runs[s].generalization);
    const GeneralizationSummary* mag = nullptr;
    const GeneralizationSummary* onl = nullptr;
    for (const auto& r : report) {
      if (r.estimator == "magellan") mag = &r;
      if (r.estimator == "online") onl = &r;
    }
    if (!mag || !onl) {
      ok = false;
      details.push_back(fmt::format("seed {}: missing generalization records", s));
      continue;
    }
    // Mastered: the last test sweep of the category is above 0.9.
    std::set<Category> mastered;
    std::int64_t last = 0;
    for (const auto& g : runs[s].generalization) last = std::max(last, g.episode);
    for (const auto& g : runs[s].generalization)
      if (g.episode == last && g.estimator == "online" && g.category != Category::Impossible && g.sr > 0.9)
        mastered.insert(g.category);
    bool structure = !mastered.empty();
    std::vector<std::string> pairs;
    for (auto c : mastered) {
      const int ci = category_index(c);
      structure &= std::abs(onl->error[ci] - onl->sr[ci]) <= 0.05;
      pairs.push_back(fmt::format("{} err={:.3f} sr={:.3f}", to_string(c), onl->error[ci], onl->sr[ci]));
    }
    wins += mag->macro < onl->macro;
    ok &= structure && mag->macro < onl->macro;
    details.push_back(fmt::format("seed {}: macro magellan={:.3f} online={:.3f}; online on mastered: {}", s,
                                  mag->macro, onl->macro, pairs.empty() ? "none" : fmt::format("{}", fmt::join(pairs, ", "))));
  }
  return {ok, fmt::format("magellan below online in {}/{} seeds", wins, runs.size()), details};
}

// --- 8 ---------------------------------------------------------------------

Outcome q4_adaptation() {
  std::map<std::string, std::vector<double>> eff;
  std::vector<std::string> details;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto t0 = Clock::now();
    AdaptationConfig a;
    a.base = q2_config(Method{false, EstimatorKind::Magellan}, seed);
    a.base.test_sweeps = false;
    a.methods = {Method{false, EstimatorKind::Magellan}, Method{false, EstimatorKind::Online},
                 Method{true, {}}};
    const auto arms = adaptation_test(a);
    std::vector<std::string> per;
    for (const auto& arm : arms) {
      const double e = arm.efficiency.back();  // kappa = 50k
      eff[to_string(arm.method)].push_back(e);
      per.push_back(fmt::format("{}@{}={:.0f}", to_string(arm.method), arm.swap_point, e));
    }
    details.push_back(fmt::format("seed {}: {} | {:.0f} s", seed, fmt::join(per, " "), seconds_since(t0)));
  }
  const double mag = mean(eff["magellan"]), onl = mean(eff["online"]), uni = mean(eff["uniform"]);
  const bool ok = mag > onl && uni <= 0.0;
  return {ok,
          fmt::format("mean efficiency at kappa=50k magellan={:.0f} online={:.0f} uniform={:.0f}", mag, onl, uni),
          details};
}

// --- 9 ---------------------------------------------------------------------

Outcome determinism() {
  const auto dir = scratch("determinism");
  RunConfig c = q2_config(Method{false, EstimatorKind::Magellan}, 11);
  c.episodes = 10'000;
  run_training(c, dir / "a");
  run_training(c, dir / "b");
  c.estimator.exec = Exec::Serial;
  run_training(c, dir / "serial");
  bool ok = true;
  std::vector<std::string> details;
  for (auto f : {"training.csv", "evals.csv"}) {
    const auto a = slurp(dir / "a" / f);
    const bool same = !a.empty() && a == slurp(dir / "b" / f) && a == slurp(dir / "serial" / f);
    ok &= same;
    details.push_back(fmt::format("{} ({} bytes) identical across repeat and serial run: {}", f, a.size(), same));
  }
  return {ok, "10k-episode magellan run repeated", details};
}

// --- 10 --------------------------------------------------------------------

Outcome selector_statistics() {
  const std::size_t n = 50;
  Rng rng(10);
  std::vector<double> alp(n);
  for (auto& a : alp) a = uniform01(rng);
  alp[3] = 0.0;

  class Frozen final : public AlpEstimator {
   public:
    explicit Frozen(std::vector<double> v) : v_(std::move(v)) {}
    EstimatorKind kind() const override { return EstimatorKind::Online; }
    std::unique_ptr<AlpEstimator> clone() const override { return std::make_unique<Frozen>(*this); }
    void observe(GoalId, int, std::int64_t) override {}
    double competence(GoalId) const override { return 0.0; }
    double alp(GoalId g) const override { return v_[static_cast<std::size_t>(g)]; }
    void save_checkpoint(const std::filesystem::path&) const override {}
    void load_checkpoint(const std::filesystem::path&) override {}

   private:
    std::vector<double> v_;
  } est(alp);

  std::vector<GoalId> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  SelectorConfig sc;
  sc.epsilon_start = sc.epsilon_end = 0.0;
  GoalSelector sel(sc, pool, std::vector<Category>(n, Category::Grasp));
  std::vector<std::int64_t> counts(n);
  for (int i = 0; i < 100'000; ++i) ++counts[static_cast<std::size_t>(sel.select(&est, i, rng).goal)];
  const auto r = chi_square_gof(counts, alp);
  return {r.p_value > 0.01, fmt::format("chi2={:.2f} dof={} p={:.4f}", r.statistic, r.dof, r.p_value), {}};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, combinatorics},   {2, trajectory_lengths}, {3, feasibility_oracle}, {4, micro_correctness},
      {5, q1_benchmark},    {6, q2_curriculum},      {7, q3_generalization},  {8, q4_adaptation},
      {9, determinism},     {10, selector_statistics}};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what()), {}};
    }
    failed += !o.pass;
    fmt::print("criterion {}: {} {}\n", id, o.pass ? "PASS" : "FAIL", o.summary);
    for (const auto& d : o.details) fmt::print("  {}\n", d);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
