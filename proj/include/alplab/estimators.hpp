#pragma once

// Competence and absolute-learning-progress estimators behind one interface.
//
//   mb         per-goal moving-average utility over outcome differences
//   online     per-goal outcome buffer, |mean(newest half) - mean(oldest half)|
//   eval       per-goal periodic evaluation sweeps, |latest - previous|
//   ek-online  online, keyed by expert bucket
//   ek-eval    eval, keyed by expert bucket
//   magellan   learned goal-conditioned success predictor with weight snapshots

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alplab/goalspace.hpp"
#include "alplab/kernels.hpp"
#include "alplab/rng.hpp"
#include "alplab/tinynet.hpp"

namespace alplab {

enum class EstimatorKind { MB, Online, Eval, EkOnline, EkEval, Magellan };
std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view text);

// Token encodings and buckets for every goal of a space, indexed by goal id.
// The tokenizer is built from training goals only.
class GoalCatalog {
 public:
  static std::shared_ptr<const GoalCatalog> build(const GoalSpace& space);

  const Tokenizer& tokenizer() const { return tokenizer_; }
  const TokenTable& tokens() const { return tokens_; }
  Category bucket(GoalId id) const { return buckets_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return buckets_.size(); }

 private:
  Tokenizer tokenizer_;
  TokenTable tokens_;
  std::vector<Category> buckets_;
};

// One entry per evaluation episode; goals may repeat.
struct EvaluationRequest {
  std::vector<GoalId> goals;
};

class AlpEstimator {
 public:
  virtual ~AlpEstimator() = default;

  virtual EstimatorKind kind() const = 0;
  virtual std::unique_ptr<AlpEstimator> clone() const = 0;

  // Outcome must be 0 or 1; anything else throws ValidationError.
  virtual void observe(GoalId goal, int outcome, std::int64_t episode) = 0;
  virtual double competence(GoalId goal) const = 0;
  virtual double alp(GoalId goal) const = 0;
  virtual void competence_many(std::span<const GoalId> goals, std::span<double> out) const;
  virtual void alp_many(std::span<const GoalId> goals, std::span<double> out) const;

  // Evaluation-based estimators ask for frozen-policy episodes after every
  // `frequency` training episodes. `episodes_completed` counts training
  // episodes finished so far.
  virtual std::optional<EvaluationRequest> needs_evaluation(std::int64_t episodes_completed);
  virtual void ingest_evaluation(const EvaluationRequest& request, std::span<const int> outcomes);
  virtual std::int64_t evaluation_cost() const { return 0; }

  // Goals the estimator is responsible for (what eval sweeps cover).
  virtual void set_pool(std::span<const GoalId> goals);

  virtual void save_checkpoint(const std::filesystem::path& dir) const = 0;
  virtual void load_checkpoint(const std::filesystem::path& dir) = 0;
};

// A bounded FIFO of binary outcomes with O(1) half sums.
class OutcomeBuffer {
 public:
  explicit OutcomeBuffer(std::size_t capacity = 100) : capacity_(capacity) {}

  void push(int outcome);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<std::uint8_t>& items() const { return items_; }

  // Mean of the newest ceil(n/2) entries; 0 when empty.
  double recent_mean() const;
  // |mean(newest half) - mean(oldest half)|; 0 with fewer than two entries.
  double alp() const;
  double mean() const;

 private:
  std::size_t capacity_;
  std::deque<std::uint8_t> items_;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Magellan;
  std::uint64_t seed = 0;

  // mb
  std::size_t mb_history = 100;
  double mb_alpha = 0.3;

  // online, ek-online
  std::size_t online_buffer = 100;

  // eval, ek-eval
  std::int64_t eval_frequency = 1000;
  int eval_per_goal = 1;
  int eval_per_bucket = 2048;

  // magellan
  std::size_t magellan_data_capacity = 5000;
  std::size_t magellan_snapshot_capacity = 100;
  std::int64_t magellan_update_period = 32;
  std::size_t magellan_batch_size = 256;
  int magellan_steps_per_update = 1;
  double magellan_learning_rate = 1e-4;
  int magellan_embed_dim = 64;
  int magellan_hidden = 128;
  double magellan_init_scale = 0.05;
  Exec exec = Exec::Parallel;

  void validate() const;
};

std::unique_ptr<AlpEstimator> make_estimator(const EstimatorConfig& config,
                                             std::shared_ptr<const GoalCatalog> catalog,
                                             std::span<const GoalId> pool);

class MbEstimator final : public AlpEstimator {
 public:
  MbEstimator(std::size_t goals, std::size_t history, double alpha);

  EstimatorKind kind() const override { return EstimatorKind::MB; }
  std::unique_ptr<AlpEstimator> clone() const override;
  void observe(GoalId goal, int outcome, std::int64_t episode) override;
  double competence(GoalId goal) const override;
  double alp(GoalId goal) const override;
  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

  // The moving-average rule on its own: mean |outcome - past| over `history`
  // (0 when empty), then alpha * utility + (1 - alpha) * that mean.
  static double update_utility(double utility, std::span<const std::uint8_t> history, int outcome,
                               double alpha);

 private:
  struct Entry {
    std::deque<std::uint8_t> history;
    double utility = 0.0;
  };
  std::size_t history_cap_;
  double alpha_;
  std::vector<Entry> entries_;
};

// Online-ALP keyed per goal or per bucket.
class OnlineEstimator final : public AlpEstimator {
 public:
  OnlineEstimator(std::shared_ptr<const GoalCatalog> catalog, std::size_t capacity, bool by_bucket);

  EstimatorKind kind() const override {
    return by_bucket_ ? EstimatorKind::EkOnline : EstimatorKind::Online;
  }
  std::unique_ptr<AlpEstimator> clone() const override;
  void observe(GoalId goal, int outcome, std::int64_t episode) override;
  double competence(GoalId goal) const override;
  double alp(GoalId goal) const override;
  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

  const OutcomeBuffer& buffer_for(GoalId goal) const { return buffers_[key(goal)]; }

 private:
  std::size_t key(GoalId goal) const;

  std::shared_ptr<const GoalCatalog> catalog_;
  bool by_bucket_;
  std::vector<OutcomeBuffer> buffers_;
  std::vector<double> competence_;
  std::vector<double> alp_;
};

// Eval-ALP keyed per goal or per bucket.
class EvalEstimator final : public AlpEstimator {
 public:
  EvalEstimator(std::shared_ptr<const GoalCatalog> catalog, std::span<const GoalId> pool,
                bool by_bucket, std::int64_t frequency, int per_key, std::uint64_t seed);

  EstimatorKind kind() const override {
    return by_bucket_ ? EstimatorKind::EkEval : EstimatorKind::Eval;
  }
  std::unique_ptr<AlpEstimator> clone() const override;
  void observe(GoalId goal, int outcome, std::int64_t episode) override;
  double competence(GoalId goal) const override;
  double alp(GoalId goal) const override;
  std::optional<EvaluationRequest> needs_evaluation(std::int64_t episodes_completed) override;
  void ingest_evaluation(const EvaluationRequest& request, std::span<const int> outcomes) override;
  std::int64_t evaluation_cost() const override { return cost_; }
  void set_pool(std::span<const GoalId> goals) override;
  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

  std::int64_t sweeps() const { return sweeps_; }

 private:
  std::size_t key(GoalId goal) const;

  std::shared_ptr<const GoalCatalog> catalog_;
  std::vector<GoalId> pool_;
  std::array<std::vector<GoalId>, kCategoryCount> pool_by_bucket_;
  bool by_bucket_;
  std::int64_t frequency_;
  int per_key_;
  Rng rng_;
  std::vector<double> latest_;
  std::vector<double> previous_;
  std::int64_t cost_ = 0;
  std::int64_t sweeps_ = 0;
};

class MagellanEstimator final : public AlpEstimator {
 public:
  MagellanEstimator(std::shared_ptr<const GoalCatalog> catalog, const EstimatorConfig& config);

  EstimatorKind kind() const override { return EstimatorKind::Magellan; }
  std::unique_ptr<AlpEstimator> clone() const override;
  void observe(GoalId goal, int outcome, std::int64_t episode) override;
  double competence(GoalId goal) const override;
  double alp(GoalId goal) const override;
  void competence_many(std::span<const GoalId> goals, std::span<double> out) const override;
  void alp_many(std::span<const GoalId> goals, std::span<double> out) const override;
  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

  const CompetenceNet& net() const { return net_; }
  const ParamStore& params() const { return params_; }
  std::size_t data_size() const { return data_.size(); }
  std::size_t snapshot_count() const { return history_.size(); }
  std::int64_t updates() const { return updates_; }
  double last_loss() const { return last_loss_; }
  void latent(GoalId goal, std::span<double> out) const;

  // Recency-ranked sampling weights i / sum(j) for positions 1..m.
  static std::vector<double> recency_weights(std::size_t m);

 private:
  struct Past {
    Snapshot snap;
    mutable std::vector<double> predictions;  // per catalog goal, NaN until computed
  };

  void update(std::int64_t episode);
  const std::vector<double>& current_predictions(std::span<const GoalId> goals) const;
  const std::vector<double>& past_predictions(const Past& past, std::span<const GoalId> goals) const;

  std::shared_ptr<const GoalCatalog> catalog_;
  EstimatorConfig config_;
  CompetenceNet net_;
  ParamStore params_;
  Adam adam_;
  Rng rng_;
  std::deque<std::pair<GoalId, std::uint8_t>> data_;
  std::deque<Past> history_;
  std::int64_t observed_ = 0;
  std::int64_t updates_ = 0;
  double last_loss_ = 0.0;
  mutable std::vector<double> current_;
};

struct CompetenceError {
  std::array<double, kCategoryCount> per_category{};
  std::array<bool, kCategoryCount> present{};
  double macro = 0.0;
};

// Per category |mean estimator competence over `goals_by_category[c]| - reference[c]|.
// Categories with no goals are skipped; the macro average covers the
// categories listed in `macro_over` that are present.
CompetenceError competence_error(const AlpEstimator& estimator,
                                 const std::array<std::vector<GoalId>, kCategoryCount>& goals_by_category,
                                 const std::array<double, kCategoryCount>& reference,
                                 std::span<const Category> macro_over);

}  // namespace alplab
