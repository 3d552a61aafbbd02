#pragma once

// Experiment protocols on top of the estimators, learners and selector:
//   run_training           curriculum training with periodic success-rate sweeps
//   estimator_benchmark    competence error and evaluation cost against a known truth
//   generalization_report  estimator error on held-out goals
//   adaptation_test        goal-space swap with per-method estimator handoff

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "alplab/curriculum.hpp"
#include "alplab/estimators.hpp"
#include "alplab/goalspace.hpp"
#include "alplab/learners.hpp"

namespace alplab {

// What drives goal selection: an ALP estimator, or uniform sampling.
struct Method {
  bool uniform = false;
  EstimatorKind estimator = EstimatorKind::Magellan;

  bool operator==(const Method&) const = default;
};
std::string to_string(const Method& method);
Method parse_method(std::string_view text);
SelectionMode selection_mode(const Method& method);

struct RunConfig {
  std::filesystem::path goal_space;  // empty: generate from `generation`
  GenerationConfig generation;
  Method method;
  EstimatorConfig estimator;
  SelectorConfig selector;  // mode is taken from the method
  LearnerConfig learner;
  std::int64_t episodes = 100'000;
  std::int64_t eval_every = 5'000;
  int eval_goals = 64;
  bool test_sweeps = true;  // also sweep the test split, for generalization
  bool shadows = true;      // track Online and EK-Online alongside the method
  bool checkpoints = true;
  bool latents = true;
  std::uint64_t seed = 0;

  void validate() const;
};

std::shared_ptr<const GoalSpace> load_or_generate(const RunConfig& config);

struct SweepRecord {
  std::int64_t episode = 0;
  Category category = Category::Impossible;
  double sr = 0.0;  // NaN when the category has no goals
  int n_goals = 0;
  double estimator_competence = 0.0;  // NaN without an estimator
  double reference_competence = 0.0;  // NaN unless the learner knows its truth
  std::int64_t cumulative_cost = 0;
};

struct GeneralizationRecord {
  std::int64_t episode = 0;
  Category category = Category::Impossible;
  std::string estimator;
  double sr = 0.0;
  int n_goals = 0;
  double competence = 0.0;
};

struct Accounting {
  std::int64_t training = 0;
  std::int64_t estimator_evaluation = 0;
  std::int64_t sr_sweeps = 0;
  std::int64_t total() const { return training + estimator_evaluation + sr_sweeps; }
};

// Per category, the first sweep episode with SR above the threshold.
struct MasteryReport {
  std::array<std::optional<std::int64_t>, kCategoryCount> first{};
};
MasteryReport mastery(std::span<const SweepRecord> sweeps, double threshold = 0.9);
// Never-mastered categories count as mastered one cadence after the end.
std::int64_t censored_mastery(const MasteryReport& report, Category category,
                              std::int64_t episodes, std::int64_t cadence);

// Fixed per-category evaluation samples. Categories smaller than `per_category`
// are drawn with replacement and flagged.
struct SweepSample {
  std::array<std::vector<GoalId>, kCategoryCount> goals;
  std::array<bool, kCategoryCount> with_replacement{};
};
SweepSample draw_sweep_sample(const GoalSpace& space, std::span<const GoalId> pool,
                              int per_category, Rng& rng);

class TrainingRun {
 public:
  TrainingRun(RunConfig config, std::shared_ptr<const GoalSpace> space);
  TrainingRun(const TrainingRun& other);
  TrainingRun& operator=(const TrainingRun&) = delete;
  ~TrainingRun();

  // Streams training.csv, evals.csv and generalization.csv into `dir`.
  void open_logs(const std::filesystem::path& dir);
  // Trains until `episode` training episodes are done; sweeps at the cadence.
  void advance_to(std::int64_t episode);
  // mastery.json, latents.csv, checkpoints/ and run_summary.json.
  void write_artifacts(const std::filesystem::path& dir) const;

  // Continue on another goal pool. The estimator is replaced per `method`:
  // MAGELLAN and the eval estimators keep their state, EK-Online resumes from
  // the shadow, Online starts empty, and uniform drops the estimator.
  void swap_pool(std::span<const GoalId> pool, const Method& method);

  std::int64_t episode() const { return episode_; }
  const RunConfig& config() const { return config_; }
  const GoalSpace& space() const { return *space_; }
  const Learner& learner() const { return *learner_; }
  const AlpEstimator* estimator() const { return estimator_.get(); }
  const AlpEstimator* shadow(EstimatorKind kind) const;
  const std::vector<SweepRecord>& sweeps() const { return sweeps_; }
  const std::vector<GeneralizationRecord>& generalization() const { return generalization_; }
  const Accounting& accounting() const { return accounting_; }
  const SweepSample& sample() const { return sample_; }

 private:
  void train_one();
  void sweep();
  void run_estimator_evaluation(AlpEstimator& estimator);
  // Frozen-policy outcomes for `goals`, one engine per index so the result
  // does not depend on how the rollouts are scheduled.
  std::vector<int> evaluate(std::span<const GoalId> goals, std::uint64_t stream);

  RunConfig config_;
  std::shared_ptr<const GoalSpace> space_;
  std::shared_ptr<const GoalCatalog> catalog_;
  std::vector<GoalId> pool_;
  std::unique_ptr<GoalSelector> selector_;
  std::unique_ptr<Learner> learner_;
  std::unique_ptr<AlpEstimator> estimator_;
  std::unique_ptr<AlpEstimator> shadow_online_;
  std::unique_ptr<AlpEstimator> shadow_ek_online_;
  Rng select_rng_;
  Rng learn_rng_;
  std::uint64_t eval_seed_ = 0;
  std::uint64_t evaluations_ = 0;  // batches of frozen rollouts so far
  SweepSample sample_;
  SweepSample test_sample_;
  std::int64_t episode_ = 0;
  bool swept_at_episode_ = false;
  Accounting accounting_;
  std::vector<SweepRecord> sweeps_;
  std::vector<GeneralizationRecord> generalization_;

  struct Logs;
  std::unique_ptr<Logs> logs_;
};

// Full curriculum run written to `out`.
std::vector<SweepRecord> run_training(const RunConfig& config, const std::filesystem::path& out);

void write_sweeps_csv(std::ostream& out, std::span<const SweepRecord> sweeps);
std::vector<SweepRecord> read_sweeps_csv(const std::filesystem::path& path);
std::vector<GeneralizationRecord> read_generalization_csv(const std::filesystem::path& path);

// goal_id, category, split, latent..., predicted. Latent columns are only
// present for MAGELLAN.
void export_latents(const AlpEstimator& estimator, const GoalSpace& space,
                    std::span<const GoalId> goals, std::ostream& out);

// --- estimator benchmark -------------------------------------------------

struct BenchmarkConfig {
  RunConfig run;  // learner must be simulated; its method drives selection
  std::vector<EstimatorKind> estimators = {EstimatorKind::MB,     EstimatorKind::Online,
                                           EstimatorKind::Eval,   EstimatorKind::EkOnline,
                                           EstimatorKind::EkEval, EstimatorKind::Magellan};
  std::int64_t error_every = 1'000;
};

struct BenchmarkRecord {
  std::int64_t episode = 0;
  EstimatorKind estimator = EstimatorKind::MB;
  CompetenceError error;
  std::int64_t cumulative_cost = 0;
};

std::vector<BenchmarkRecord> estimator_benchmark(const BenchmarkConfig& config,
                                                 const GoalSpace& space);
void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRecord> records,
                         std::size_t goal_space_size);

// --- generalization --------------------------------------------------------

struct GeneralizationSummary {
  std::string estimator;
  std::array<double, kCategoryCount> error{};  // mean over sweeps of |SR - competence|
  std::array<double, kCategoryCount> sr{};     // mean observed SR over the same sweeps
  std::array<bool, kCategoryCount> present{};
  double macro = 0.0;
};

std::vector<GeneralizationSummary> generalization_report(
    std::span<const GeneralizationRecord> records);

// --- adaptation ------------------------------------------------------------

struct AdaptationConfig {
  RunConfig base;  // must use MAGELLAN so every handoff has a source
  std::vector<std::int64_t> swap_points = {50'000, 100'000, 150'000};
  std::int64_t continuation = 50'000;
  std::vector<Method> methods = {Method{false, EstimatorKind::Magellan},
                                 Method{false, EstimatorKind::EkOnline},
                                 Method{false, EstimatorKind::Online}, Method{true, {}}};
  std::vector<std::int64_t> kappas = {10'000, 20'000, 30'000, 40'000, 50'000};

  void validate() const;
};

struct AdaptationArm {
  std::int64_t swap_point = 0;
  Method method;
  std::vector<SweepRecord> sweeps;  // episodes relative to the swap point
  std::vector<double> efficiency;   // one per kappa
};

// Mean SR over the feasible categories with goals at each sweep.
double feasible_mean_sr(std::span<const SweepRecord> sweeps, std::int64_t episode);
// Trapezoid sum of (SR(t) - SR(0)) dt over sweeps with 0 <= t <= kappa.
double sample_efficiency(std::span<const SweepRecord> relative_sweeps, std::int64_t kappa);

std::vector<AdaptationArm> adaptation_test(const AdaptationConfig& config);

}  // namespace alplab
