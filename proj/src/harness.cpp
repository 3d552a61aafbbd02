#include "alplab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "alplab/errors.hpp"
#include "json_io.hpp"

namespace alplab {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  return fmt::format("{:.6g}", v);
}

double mean_of(std::span<const double> v) {
  if (v.empty()) return kNaN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_num(const std::string& s) { return s.empty() ? kNaN : std::stod(s); }

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                               std::span<const std::string_view> header) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));
  std::string line;
  std::getline(in, line);
  const auto cols = split_csv(line);
  if (cols.size() != header.size() || !std::equal(cols.begin(), cols.end(), header.begin()))
    throw ValidationError(fmt::format("{}: unexpected header '{}'", path.string(), line));
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split_csv(line);
    if (row.size() != header.size())
      throw ValidationError(fmt::format("{}: malformed row '{}'", path.string(), line));
    rows.push_back(std::move(row));
  }
  return rows;
}

constexpr std::string_view kEvalHeader[] = {"episode",         "category",
                                            "sr",              "n_goals",
                                            "estimator_competence", "reference_competence",
                                            "cumulative_cost"};
constexpr std::string_view kGenHeader[] = {"episode", "category",  "estimator",
                                           "sr",      "n_goals",   "competence"};

std::string join_header(std::span<const std::string_view> h) {
  std::string s;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i) s += ',';
    s += h[i];
  }
  return s;
}

void write_sweep_row(std::ostream& out, const SweepRecord& r) {
  fmt::print(out, "{},{},{},{},{},{},{}\n", r.episode, to_string(r.category), num(r.sr), r.n_goals,
             num(r.estimator_competence), num(r.reference_competence), r.cumulative_cost);
}

void write_generalization_row(std::ostream& out, const GeneralizationRecord& r) {
  fmt::print(out, "{},{},{},{},{},{}\n", r.episode, to_string(r.category), r.estimator, num(r.sr),
             r.n_goals, num(r.competence));
}

std::vector<Category> buckets_of(const GoalCatalog& catalog, std::span<const GoalId> pool) {
  std::vector<Category> b;
  b.reserve(pool.size());
  for (GoalId g : pool) b.push_back(catalog.bucket(g));
  return b;
}

double mean_competence(const AlpEstimator& est, std::span<const GoalId> goals) {
  if (goals.empty()) return kNaN;
  std::vector<double> c(goals.size());
  est.competence_many(goals, c);
  return mean_of(c);
}

std::array<double, kCategoryCount> reference_of(const Learner& learner) {
  std::array<double, kCategoryCount> ref;
  ref.fill(kNaN);
  if (const auto* sim = dynamic_cast<const SimulatedLearner*>(&learner))
    for (auto c : kAllCategories) ref[category_index(c)] = sim->true_competence(c);
  return ref;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(const Method& method) {
  return method.uniform ? "uniform" : std::string(to_string(method.estimator));
}

Method parse_method(std::string_view text) {
  if (text == "uniform") return Method{true, EstimatorKind::Magellan};
  return Method{false, parse_estimator_kind(text)};
}

SelectionMode selection_mode(const Method& method) {
  if (method.uniform) return SelectionMode::Uniform;
  if (method.estimator == EstimatorKind::EkOnline || method.estimator == EstimatorKind::EkEval)
    return SelectionMode::PerBucket;
  return SelectionMode::PerGoal;
}

void RunConfig::validate() const {
  if (goal_space.empty()) generation.validate();
  estimator.validate();
  selector.validate();
  if (learner.kind == LearnerKind::Simulated) learner.schedule.validate();
  if (learner.kind == LearnerKind::QLinear) learner.q.validate();
  if (episodes < 0) throw ConfigError("episodes must be nonnegative");
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  if (eval_goals <= 0) throw ConfigError("eval_goals must be positive");
}

std::shared_ptr<const GoalSpace> load_or_generate(const RunConfig& config) {
  if (!config.goal_space.empty()) return std::make_shared<const GoalSpace>(load(config.goal_space));
  return std::make_shared<const GoalSpace>(
      generate(config.generation, Vocabulary::default_vocabulary()));
}

MasteryReport mastery(std::span<const SweepRecord> sweeps, double threshold) {
  MasteryReport r;
  for (const auto& s : sweeps) {
    auto& slot = r.first[category_index(s.category)];
    if (!slot && s.n_goals > 0 && s.sr > threshold) slot = s.episode;
  }
  return r;
}

std::int64_t censored_mastery(const MasteryReport& report, Category category,
                              std::int64_t episodes, std::int64_t cadence) {
  const auto& m = report.first[category_index(category)];
  return m ? *m : episodes + cadence;
}

SweepSample draw_sweep_sample(const GoalSpace& space, std::span<const GoalId> pool,
                              int per_category, Rng& rng) {
  std::array<std::vector<GoalId>, kCategoryCount> members;
  for (GoalId g : pool) members[category_index(space.goal(g).category)].push_back(g);
  SweepSample s;
  const auto k = static_cast<std::size_t>(per_category);
  for (int c = 0; c < kCategoryCount; ++c) {
    auto& m = members[c];
    if (m.empty()) continue;
    if (m.size() >= k) {
      // Partial Fisher-Yates: the first k positions are a uniform sample.
      for (std::size_t i = 0; i < k; ++i) std::swap(m[i], m[i + uniform_index(rng, m.size() - i)]);
      s.goals[c].assign(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      s.with_replacement[c] = true;
      for (std::size_t i = 0; i < k; ++i) s.goals[c].push_back(m[uniform_index(rng, m.size())]);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// TrainingRun

struct TrainingRun::Logs {
  std::ofstream training;
  std::ofstream evals;
  std::ofstream generalization;
};

TrainingRun::TrainingRun(RunConfig config, std::shared_ptr<const GoalSpace> space)
    : config_(std::move(config)),
      space_(std::move(space)),
      select_rng_(derive_seed(config_.seed, "selector")),
      learn_rng_(derive_seed(config_.seed, "learner")),
      eval_seed_(derive_seed(config_.seed, "frozen-eval")) {
  config_.validate();
  config_.selector.mode = selection_mode(config_.method);
  config_.estimator.seed = derive_seed(config_.seed, "estimator");
  catalog_ = GoalCatalog::build(*space_);
  pool_ = space_->ids(Split::Train);
  if (pool_.empty()) throw ConfigError("the goal space has no training goals");

  const auto buckets = buckets_of(*catalog_, pool_);
  selector_ = std::make_unique<GoalSelector>(config_.selector, pool_, buckets);
  learner_ = make_learner(config_.learner);
  if (!config_.method.uniform) {
    EstimatorConfig ec = config_.estimator;
    ec.kind = config_.method.estimator;
    estimator_ = make_estimator(ec, catalog_, pool_);
  }
  if (config_.shadows) {
    EstimatorConfig ec = config_.estimator;
    ec.kind = EstimatorKind::Online;
    shadow_online_ = make_estimator(ec, catalog_, pool_);
    ec.kind = EstimatorKind::EkOnline;
    shadow_ek_online_ = make_estimator(ec, catalog_, pool_);
  }

  Rng sample_rng(derive_seed(config_.seed, "sweep-sample"));
  sample_ = draw_sweep_sample(*space_, pool_, config_.eval_goals, sample_rng);
  if (config_.test_sweeps) {
    const auto test = space_->ids(Split::Test);
    test_sample_ = draw_sweep_sample(*space_, test, config_.eval_goals, sample_rng);
  }
}

TrainingRun::TrainingRun(const TrainingRun& o)
    : config_(o.config_),
      space_(o.space_),
      catalog_(o.catalog_),
      pool_(o.pool_),
      selector_(std::make_unique<GoalSelector>(*o.selector_)),
      learner_(o.learner_->clone()),
      estimator_(o.estimator_ ? o.estimator_->clone() : nullptr),
      shadow_online_(o.shadow_online_ ? o.shadow_online_->clone() : nullptr),
      shadow_ek_online_(o.shadow_ek_online_ ? o.shadow_ek_online_->clone() : nullptr),
      select_rng_(o.select_rng_),
      learn_rng_(o.learn_rng_),
      eval_seed_(o.eval_seed_),
      evaluations_(o.evaluations_),
      sample_(o.sample_),
      test_sample_(o.test_sample_),
      episode_(o.episode_),
      swept_at_episode_(o.swept_at_episode_),
      accounting_(o.accounting_),
      sweeps_(o.sweeps_),
      generalization_(o.generalization_) {}

TrainingRun::~TrainingRun() = default;

const AlpEstimator* TrainingRun::shadow(EstimatorKind kind) const {
  if (kind == EstimatorKind::Online) return shadow_online_.get();
  if (kind == EstimatorKind::EkOnline) return shadow_ek_online_.get();
  return nullptr;
}

void TrainingRun::open_logs(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  logs_ = std::make_unique<Logs>();
  auto open = [&](std::ofstream& f, const char* name) {
    f.open(dir / name);
    if (!f) throw IoError(fmt::format("cannot write {}", (dir / name).string()));
  };
  open(logs_->training, "training.csv");
  open(logs_->evals, "evals.csv");
  logs_->training << "episode,goal_id,category,outcome,alp_at_selection,epsilon,exploratory_flag\n";
  logs_->evals << join_header(kEvalHeader) << '\n';
  if (config_.test_sweeps) {
    open(logs_->generalization, "generalization.csv");
    logs_->generalization << join_header(kGenHeader) << '\n';
  }
}

void TrainingRun::advance_to(std::int64_t target) {
  if (!swept_at_episode_ && episode_ % config_.eval_every == 0) sweep();
  while (episode_ < target) {
    train_one();
    if (episode_ % config_.eval_every == 0) sweep();
  }
  if (logs_) {
    logs_->training.flush();
    logs_->evals.flush();
    if (logs_->generalization.is_open()) logs_->generalization.flush();
    if (!logs_->training || !logs_->evals) throw IoError("failed writing run logs");
  }
}

void TrainingRun::train_one() {
  const SelectionEvent ev = selector_->select(estimator_.get(), episode_, select_rng_);
  const Goal& goal = space_->goal(ev.goal);
  const int outcome = learner_->train_episode(goal, learn_rng_);
  if (estimator_) estimator_->observe(ev.goal, outcome, episode_);
  if (shadow_online_) shadow_online_->observe(ev.goal, outcome, episode_);
  if (shadow_ek_online_) shadow_ek_online_->observe(ev.goal, outcome, episode_);

  if (logs_) {
    fmt::print(logs_->training, "{},{},{},{},{},{},{}\n", episode_, ev.goal,
               to_string(goal.category), outcome, estimator_ ? num(ev.alp) : std::string(),
               num(ev.epsilon), ev.exploratory ? 1 : 0);
  }
  ++episode_;
  swept_at_episode_ = false;
  ++accounting_.training;
  if (estimator_) run_estimator_evaluation(*estimator_);
}

std::vector<int> TrainingRun::evaluate(std::span<const GoalId> goals, std::uint64_t stream) {
  const std::uint64_t batch = mix(mix(eval_seed_, stream), evaluations_++);
  std::vector<int> out(goals.size());
  const Learner& learner = *learner_;
  const GoalSpace& space = *space_;
  const auto n = static_cast<std::int64_t>(goals.size());
  const bool parallel = config_.estimator.exec == Exec::Parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng(mix(batch, static_cast<std::uint64_t>(i)));
    out[static_cast<std::size_t>(i)] =
        learner.eval_episode(space.goal(goals[static_cast<std::size_t>(i)]), rng);
  }
  return out;
}

void TrainingRun::run_estimator_evaluation(AlpEstimator& estimator) {
  auto request = estimator.needs_evaluation(episode_);
  if (!request) return;
  const auto version = learner_->version();
  const auto outcomes = evaluate(request->goals, 1);
  if (learner_->version() != version)
    throw InvariantError("learner changed during an estimator evaluation sweep");
  estimator.ingest_evaluation(*request, outcomes);
  accounting_.estimator_evaluation += static_cast<std::int64_t>(outcomes.size());
}

void TrainingRun::sweep() {
  swept_at_episode_ = true;
  const auto version = learner_->version();
  const auto reference = reference_of(*learner_);
  const std::int64_t cost = estimator_ ? estimator_->evaluation_cost() : 0;

  std::vector<GoalId> all;
  for (const auto& g : sample_.goals) all.insert(all.end(), g.begin(), g.end());
  const auto outcomes = evaluate(all, 2);
  accounting_.sr_sweeps += static_cast<std::int64_t>(outcomes.size());

  std::size_t at = 0;
  for (auto c : kAllCategories) {
    const auto& goals = sample_.goals[category_index(c)];
    SweepRecord r;
    r.episode = episode_;
    r.category = c;
    r.n_goals = static_cast<int>(goals.size());
    r.sr = goals.empty() ? kNaN
                         : std::accumulate(outcomes.begin() + static_cast<std::ptrdiff_t>(at),
                                           outcomes.begin() + static_cast<std::ptrdiff_t>(at + goals.size()),
                                           0.0) / static_cast<double>(goals.size());
    at += goals.size();
    r.estimator_competence = estimator_ ? mean_competence(*estimator_, goals) : kNaN;
    r.reference_competence = goals.empty() ? kNaN : reference[category_index(c)];
    r.cumulative_cost = cost;
    sweeps_.push_back(r);
    if (logs_) write_sweep_row(logs_->evals, r);
  }

  if (config_.test_sweeps) {
    std::vector<GoalId> test;
    for (const auto& g : test_sample_.goals) test.insert(test.end(), g.begin(), g.end());
    if (!test.empty()) {
      const auto test_outcomes = evaluate(test, 3);
      accounting_.sr_sweeps += static_cast<std::int64_t>(test_outcomes.size());

      std::vector<std::pair<std::string, const AlpEstimator*>> ests;
      if (estimator_) ests.emplace_back(to_string(config_.method), estimator_.get());
      for (const auto* s : {shadow_online_.get(), shadow_ek_online_.get()}) {
        if (!s) continue;
        const std::string name(to_string(s->kind()));
        if (std::none_of(ests.begin(), ests.end(), [&](auto& e) { return e.first == name; }))
          ests.emplace_back(name, s);
      }
      at = 0;
      for (auto c : kAllCategories) {
        const auto& goals = test_sample_.goals[category_index(c)];
        if (goals.empty()) continue;
        const double sr = std::accumulate(test_outcomes.begin() + static_cast<std::ptrdiff_t>(at),
                                          test_outcomes.begin() + static_cast<std::ptrdiff_t>(at + goals.size()),
                                          0.0) / static_cast<double>(goals.size());
        at += goals.size();
        for (const auto& [name, est] : ests) {
          GeneralizationRecord g{episode_, c, name, sr, static_cast<int>(goals.size()),
                                 mean_competence(*est, goals)};
          generalization_.push_back(g);
          if (logs_) write_generalization_row(logs_->generalization, g);
        }
      }
    }
  }

  if (learner_->version() != version)
    throw InvariantError("learner changed during a success-rate sweep");
}

void TrainingRun::swap_pool(std::span<const GoalId> pool, const Method& method) {
  if (pool.empty()) throw ConfigError("replacement goal pool is empty");
  std::vector<bool> current(space_->size(), false);
  for (GoalId g : pool_) current[static_cast<std::size_t>(g)] = true;
  for (GoalId g : pool)
    if (current.at(static_cast<std::size_t>(g)))
      throw ConfigError(fmt::format("replacement pool shares goal {} with the current pool", g));
  pool_.assign(pool.begin(), pool.end());

  std::unique_ptr<AlpEstimator> next;
  if (!method.uniform) {
    EstimatorConfig ec = config_.estimator;
    ec.kind = method.estimator;
    if (estimator_ && estimator_->kind() == method.estimator && method.estimator != EstimatorKind::Online)
      next = std::move(estimator_);
    else if (method.estimator == EstimatorKind::EkOnline && shadow_ek_online_)
      next = shadow_ek_online_->clone();
    else if (method.estimator == EstimatorKind::Magellan)
      throw ConfigError("a MAGELLAN handoff needs a MAGELLAN base run");
    else
      next = make_estimator(ec, catalog_, pool_);
    next->set_pool(pool_);
  }
  estimator_ = std::move(next);
  config_.method = method;
  config_.selector.mode = selection_mode(method);
  selector_ = std::make_unique<GoalSelector>(config_.selector, pool_, buckets_of(*catalog_, pool_));

  Rng sample_rng(derive_seed(config_.seed, "swap-sample"));
  sample_ = draw_sweep_sample(*space_, pool_, config_.eval_goals, sample_rng);
  config_.test_sweeps = false;
  test_sample_ = {};
  swept_at_episode_ = false;
}

void TrainingRun::write_artifacts(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);

  const MasteryReport m = mastery(sweeps_);
  json mj;
  mj["threshold"] = 0.9;
  mj["cadence"] = config_.eval_every;
  mj["episodes"] = episode_;
  for (auto c : kAllCategories) {
    const auto& v = m.first[category_index(c)];
    mj["mastery"][std::string(to_string(c))] = v ? json(*v) : json(nullptr);
  }
  detail::write_json(dir / "mastery.json", mj, 2);

  if (config_.latents) {
    std::ofstream out(dir / "latents.csv");
    if (!out) throw IoError(fmt::format("cannot write {}", (dir / "latents.csv").string()));
    std::vector<GoalId> all(space_->size());
    std::iota(all.begin(), all.end(), 0);
    if (estimator_) {
      export_latents(*estimator_, *space_, all, out);
    } else {
      out << "goal_id,category,split,predicted\n";
      for (GoalId g : all)
        fmt::print(out, "{},{},{},\n", g, to_string(space_->goal(g).category),
                   to_string(space_->split(g)));
    }
  }

  save(*space_, dir / "goals.jsonl");

  if (config_.checkpoints) {
    const auto ck = dir / "checkpoints";
    learner_->save_checkpoint(ck / "learner");
    if (estimator_) estimator_->save_checkpoint(ck / "estimator");
    if (shadow_online_) shadow_online_->save_checkpoint(ck / "shadow-online");
    if (shadow_ek_online_) shadow_ek_online_->save_checkpoint(ck / "shadow-ek-online");
    detail::write_json(ck / "run.json", {{"episode", episode_},
                                         {"method", to_string(config_.method)},
                                         {"selector_rng", detail::rng_state(select_rng_)},
                                         {"learner_rng", detail::rng_state(learn_rng_)},
                                         {"evaluations", evaluations_}});
  }

  json s;
  s["method"] = to_string(config_.method);
  s["learner"] = std::string(to_string(config_.learner.kind));
  s["seed"] = config_.seed;
  s["episodes"] = episode_;
  s["goals"] = {{"train", space_->ids(Split::Train).size()}, {"test", space_->ids(Split::Test).size()}};
  s["episode_accounting"] = {{"training", accounting_.training},
                             {"estimator_evaluation", accounting_.estimator_evaluation},
                             {"sr_sweeps", accounting_.sr_sweeps},
                             {"total", accounting_.total()}};
  json flagged = json::array();
  for (auto c : kAllCategories)
    if (sample_.with_replacement[category_index(c)]) flagged.push_back(std::string(to_string(c)));
  s["sweep_sampled_with_replacement"] = flagged;
  json tflagged = json::array();
  for (auto c : kAllCategories)
    if (test_sample_.with_replacement[category_index(c)]) tflagged.push_back(std::string(to_string(c)));
  s["test_sweep_sampled_with_replacement"] = tflagged;
  if (const auto* mag = dynamic_cast<const MagellanEstimator*>(estimator_.get()))
    s["magellan"] = {{"updates", mag->updates()}, {"last_loss", mag->last_loss()}};
  detail::write_json(dir / "run_summary.json", s, 2);
}

std::vector<SweepRecord> run_training(const RunConfig& config, const std::filesystem::path& out) {
  TrainingRun run(config, load_or_generate(config));
  run.open_logs(out);
  for (auto c : kAllCategories)
    if (run.sample().with_replacement[category_index(c)])
      fmt::print(stderr, "note: {} has fewer than {} training goals; sweep sample drawn with replacement\n",
                 to_string(c), config.eval_goals);
  run.advance_to(config.episodes);
  run.write_artifacts(out);
  return run.sweeps();
}

void write_sweeps_csv(std::ostream& out, std::span<const SweepRecord> sweeps) {
  out << join_header(kEvalHeader) << '\n';
  for (const auto& r : sweeps) write_sweep_row(out, r);
}

std::vector<SweepRecord> read_sweeps_csv(const std::filesystem::path& path) {
  std::vector<SweepRecord> out;
  for (const auto& row : read_csv(path, kEvalHeader)) {
    SweepRecord r;
    r.episode = std::stoll(row[0]);
    r.category = parse_category(row[1]);
    r.sr = parse_num(row[2]);
    r.n_goals = std::stoi(row[3]);
    r.estimator_competence = parse_num(row[4]);
    r.reference_competence = parse_num(row[5]);
    r.cumulative_cost = std::stoll(row[6]);
    out.push_back(r);
  }
  return out;
}

std::vector<GeneralizationRecord> read_generalization_csv(const std::filesystem::path& path) {
  std::vector<GeneralizationRecord> out;
  for (const auto& row : read_csv(path, kGenHeader))
    out.push_back({std::stoll(row[0]), parse_category(row[1]), row[2], parse_num(row[3]),
                   std::stoi(row[4]), parse_num(row[5])});
  return out;
}

void export_latents(const AlpEstimator& estimator, const GoalSpace& space,
                    std::span<const GoalId> goals, std::ostream& out) {
  const auto* mag = dynamic_cast<const MagellanEstimator*>(&estimator);
  const int dim = mag ? mag->net().shape().embed_dim : 0;
  out << "goal_id,category,split";
  for (int i = 0; i < dim; ++i) out << ",z" << i;
  out << ",predicted\n";

  std::vector<double> pred(goals.size());
  estimator.competence_many(goals, pred);
  std::vector<double> z(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const GoalId g = goals[i];
    fmt::print(out, "{},{},{}", g, to_string(space.goal(g).category), to_string(space.split(g)));
    if (mag) {
      mag->latent(g, z);
      for (double v : z) fmt::print(out, ",{:.6g}", v);
    }
    fmt::print(out, ",{}\n", num(pred[i]));
  }
  if (!out) throw IoError("failed writing latents");
}

// ---------------------------------------------------------------------------
// Estimator benchmark

std::vector<BenchmarkRecord> estimator_benchmark(const BenchmarkConfig& config,
                                                 const GoalSpace& space) {
  const RunConfig& rc = config.run;
  rc.validate();
  if (rc.learner.kind != LearnerKind::Simulated)
    throw ConfigError("the estimator benchmark needs the simulated learner");
  if (config.error_every <= 0) throw ConfigError("error_every must be positive");
  if (config.estimators.empty()) throw ConfigError("no estimators to benchmark");

  auto catalog = GoalCatalog::build(space);
  const auto pool = space.ids(Split::Train);
  if (pool.empty()) throw ConfigError("the goal space has no training goals");

  SimulatedLearner learner(rc.learner.schedule);
  std::vector<std::unique_ptr<AlpEstimator>> ests;
  for (auto kind : config.estimators) {
    EstimatorConfig ec = rc.estimator;
    ec.kind = kind;
    ec.seed = derive_seed(rc.seed, fmt::format("estimator/{}", to_string(kind)));
    ests.push_back(make_estimator(ec, catalog, pool));
  }
  const AlpEstimator* driver = nullptr;
  if (!rc.method.uniform) {
    for (const auto& e : ests)
      if (e->kind() == rc.method.estimator) driver = e.get();
    if (!driver)
      throw ConfigError(fmt::format("selection method '{}' is not among the benchmarked estimators",
                                    to_string(rc.method)));
  }

  SelectorConfig sc = rc.selector;
  sc.mode = selection_mode(rc.method);
  GoalSelector selector(sc, pool, buckets_of(*catalog, pool));
  Rng select_rng(derive_seed(rc.seed, "selector"));
  Rng learn_rng(derive_seed(rc.seed, "learner"));
  Rng eval_rng(derive_seed(rc.seed, "frozen-eval"));
  Rng sample_rng(derive_seed(rc.seed, "sweep-sample"));
  const SweepSample sample = draw_sweep_sample(space, pool, rc.eval_goals, sample_rng);

  std::vector<BenchmarkRecord> records;
  auto record = [&](std::int64_t episode) {
    std::array<double, kCategoryCount> truth{};
    for (auto c : kAllCategories) truth[category_index(c)] = learner.true_competence(c);
    for (const auto& e : ests)
      records.push_back({episode, e->kind(),
                         competence_error(*e, sample.goals, truth, kAllCategories),
                         e->evaluation_cost()});
  };

  for (std::int64_t ep = 0; ep < rc.episodes; ++ep) {
    if (ep % config.error_every == 0) record(ep);
    const SelectionEvent ev = selector.select(driver, ep, select_rng);
    const Goal& goal = space.goal(ev.goal);
    const int outcome = learner.train_episode(goal, learn_rng);
    for (auto& e : ests) {
      e->observe(ev.goal, outcome, ep);
      if (auto req = e->needs_evaluation(ep + 1)) {
        std::vector<int> outs;
        outs.reserve(req->goals.size());
        for (GoalId g : req->goals) outs.push_back(learner.eval_episode(space.goal(g), eval_rng));
        e->ingest_evaluation(*req, outs);
      }
    }
  }
  if (rc.episodes % config.error_every == 0) record(rc.episodes);
  return records;
}

void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRecord> records,
                         std::size_t goal_space_size) {
  out << "goal_space_size,episode,estimator,category,error,cumulative_cost\n";
  for (const auto& r : records) {
    for (auto c : kAllCategories)
      if (r.error.present[category_index(c)])
        fmt::print(out, "{},{},{},{},{},{}\n", goal_space_size, r.episode, to_string(r.estimator),
                   to_string(c), num(r.error.per_category[category_index(c)]), r.cumulative_cost);
    fmt::print(out, "{},{},{},macro,{},{}\n", goal_space_size, r.episode, to_string(r.estimator),
               num(r.error.macro), r.cumulative_cost);
  }
}

// ---------------------------------------------------------------------------
// Generalization

std::vector<GeneralizationSummary> generalization_report(
    std::span<const GeneralizationRecord> records) {
  std::vector<std::string> names;
  for (const auto& r : records)
    if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);

  std::vector<GeneralizationSummary> out;
  for (const auto& name : names) {
    GeneralizationSummary s;
    s.estimator = name;
    std::array<int, kCategoryCount> n{};
    for (const auto& r : records) {
      if (r.estimator != name || r.n_goals == 0) continue;
      const int c = category_index(r.category);
      s.error[c] += std::abs(r.sr - r.competence);
      s.sr[c] += r.sr;
      ++n[c];
    }
    int present = 0;
    for (int c = 0; c < kCategoryCount; ++c) {
      if (n[c] == 0) continue;
      s.present[c] = true;
      s.error[c] /= n[c];
      s.sr[c] /= n[c];
      s.macro += s.error[c];
      ++present;
    }
    if (present) s.macro /= present;
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adaptation

void AdaptationConfig::validate() const {
  base.validate();
  if (base.method.uniform || base.method.estimator != EstimatorKind::Magellan)
    throw ConfigError("the adaptation base run must use the magellan estimator");
  if (!base.shadows) throw ConfigError("the adaptation base run needs shadow estimators");
  if (swap_points.empty()) throw ConfigError("no swap points");
  for (auto t : swap_points)
    if (t <= 0 || t % base.eval_every != 0)
      throw ConfigError(fmt::format("swap point {} is not a positive multiple of the eval cadence", t));
  if (continuation <= 0 || continuation % base.eval_every != 0)
    throw ConfigError("continuation must be a positive multiple of the eval cadence");
  for (auto k : kappas)
    if (k <= 0 || k > continuation) throw ConfigError(fmt::format("kappa {} is out of range", k));
}

double feasible_mean_sr(std::span<const SweepRecord> sweeps, std::int64_t episode) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : sweeps) {
    if (s.episode != episode || s.category == Category::Impossible || s.n_goals == 0) continue;
    sum += s.sr;
    ++n;
  }
  if (n == 0) throw UsageError(fmt::format("no feasible sweep records at episode {}", episode));
  return sum / n;
}

double sample_efficiency(std::span<const SweepRecord> relative_sweeps, std::int64_t kappa) {
  std::vector<std::int64_t> times;
  for (const auto& s : relative_sweeps)
    if (s.episode >= 0 && s.episode <= kappa &&
        std::find(times.begin(), times.end(), s.episode) == times.end())
      times.push_back(s.episode);
  std::sort(times.begin(), times.end());
  if (times.empty() || times.front() != 0)
    throw UsageError("sample efficiency needs a sweep at the swap point");
  const double base = feasible_mean_sr(relative_sweeps, 0);
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double a = feasible_mean_sr(relative_sweeps, times[i]) - base;
    const double b = feasible_mean_sr(relative_sweeps, times[i + 1]) - base;
    area += 0.5 * (a + b) * static_cast<double>(times[i + 1] - times[i]);
  }
  return area;
}

std::vector<AdaptationArm> adaptation_test(const AdaptationConfig& config) {
  config.validate();
  RunConfig rc = config.base;
  rc.test_sweeps = false;
  rc.latents = false;
  auto space = load_or_generate(rc);
  const auto test = space->ids(Split::Test);
  if (test.empty()) throw ConfigError("adaptation needs a goal space with a test split");

  auto points = config.swap_points;
  std::sort(points.begin(), points.end());
  TrainingRun base(rc, space);
  std::vector<AdaptationArm> arms;
  for (auto t : points) {
    base.advance_to(t);
    for (const auto& method : config.methods) {
      TrainingRun arm(base);
      arm.swap_pool(test, method);
      const std::size_t start = arm.sweeps().size();
      arm.advance_to(t + config.continuation);
      AdaptationArm a;
      a.swap_point = t;
      a.method = method;
      for (std::size_t i = start; i < arm.sweeps().size(); ++i) {
        SweepRecord r = arm.sweeps()[i];
        r.episode -= t;
        a.sweeps.push_back(r);
      }
      for (auto k : config.kappas) a.efficiency.push_back(sample_efficiency(a.sweeps, k));
      arms.push_back(std::move(a));
    }
  }
  return arms;
}

}  // namespace alplab
