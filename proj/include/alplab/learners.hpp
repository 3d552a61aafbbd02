#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string_view>
#include <vector>

#include "alplab/env.hpp"
#include "alplab/rng.hpp"

namespace alplab {

enum class LearnerKind { Expert, Simulated, QLinear };
std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view text);

class Learner {
 public:
  virtual ~Learner() = default;

  virtual LearnerKind kind() const = 0;
  virtual std::unique_ptr<Learner> clone() const = 0;

  // One training episode on `goal`; the learner updates from it. Returns the
  // binary outcome.
  virtual int train_episode(const Goal& goal, Rng& rng) = 0;
  // One frozen-policy episode. Never changes learner state.
  virtual int eval_episode(const Goal& goal, Rng& rng) const = 0;

  // Incremented by every learning update.
  virtual std::uint64_t version() const = 0;

  virtual void save_checkpoint(const std::filesystem::path& dir) const = 0;
  virtual void load_checkpoint(const std::filesystem::path& dir) = 0;
};

// A policy acting in the environment.
class PolicyLearner : public Learner {
 public:
  virtual Action act(const EnvState& state, const Goal& goal, Rng& rng, bool greedy) const = 0;

  struct Step {
    EnvState state;  // before the action
    Action action;
    int reward = 0;
  };
  struct Trajectory {
    std::vector<Step> steps;
    EnvState final_state;
    bool succeeded = false;
  };

  virtual void learn(const Goal& goal, const Trajectory& trajectory) = 0;

  Trajectory rollout(const Goal& goal, Rng& rng, bool greedy) const;
  int train_episode(const Goal& goal, Rng& rng) override;
  int eval_episode(const Goal& goal, Rng& rng) const override;
};

// Scripted optimal strategy; infeasible goals get the first legal action.
class ExpertLearner final : public PolicyLearner {
 public:
  LearnerKind kind() const override { return LearnerKind::Expert; }
  std::unique_ptr<Learner> clone() const override { return std::make_unique<ExpertLearner>(*this); }
  Action act(const EnvState& state, const Goal& goal, Rng& rng, bool greedy) const override;
  void learn(const Goal&, const Trajectory&) override { ++version_; }
  std::uint64_t version() const override { return version_; }
  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

 private:
  std::uint64_t version_ = 0;
};

struct Ramp {
  double start = 0.0;      // earliest episode the ramp may begin
  double rate = 3e-4;      // per episode
  double asymptote = 0.95;
};

struct ScheduleConfig {
  // Indexed by category; the Impossible entry is ignored (always 0).
  std::array<Ramp, kCategoryCount> ramps = {
      Ramp{0, 0, 0}, Ramp{0, 4e-4, 0.98}, Ramp{0, 3e-4, 0.95}, Ramp{0, 2.5e-4, 0.9},
      Ramp{0, 2e-4, 0.85}};
  bool gated = true;
  double gate_threshold = 0.5;

  void validate() const;
};

// p_c(t) = a * tanh(r * (t - s_c) / 2) for t >= s_c, else 0, where s_c is the
// later of the configured start and the episode at which category c-1
// crosses the gate threshold (when gated).
class CompetenceSchedule {
 public:
  explicit CompetenceSchedule(ScheduleConfig config);

  double probability(Category category, double episode) const;
  double effective_start(Category category) const;
  const ScheduleConfig& config() const { return config_; }

 private:
  ScheduleConfig config_;
  std::array<double, kCategoryCount> start_{};
};

// Outcomes are Bernoulli draws from the schedule; no environment rollout.
class SimulatedLearner final : public Learner {
 public:
  explicit SimulatedLearner(ScheduleConfig config);

  LearnerKind kind() const override { return LearnerKind::Simulated; }
  std::unique_ptr<Learner> clone() const override {
    return std::make_unique<SimulatedLearner>(*this);
  }
  int train_episode(const Goal& goal, Rng& rng) override;
  int eval_episode(const Goal& goal, Rng& rng) const override;
  std::uint64_t version() const override { return episodes_; }

  double true_competence(Category category) const;
  std::int64_t episodes() const { return episodes_; }
  const CompetenceSchedule& schedule() const { return schedule_; }

  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

 private:
  CompetenceSchedule schedule_;
  std::int64_t episodes_ = 0;
};

struct QConfig {
  double learning_rate = 0.05;  // divided by the number of active features
  double discount = 0.99;
  int n_step = 3;
  double exploration = 0.1;
  int hash_bits = 16;

  void validate() const;
};

// Linear action values over hashed binary features of (state, action).
class FeatureQLearner final : public PolicyLearner {
 public:
  explicit FeatureQLearner(QConfig config);

  LearnerKind kind() const override { return LearnerKind::QLinear; }
  std::unique_ptr<Learner> clone() const override {
    return std::make_unique<FeatureQLearner>(*this);
  }
  Action act(const EnvState& state, const Goal& goal, Rng& rng, bool greedy) const override;
  void learn(const Goal& goal, const Trajectory& trajectory) override;
  std::uint64_t version() const override { return version_; }

  static constexpr int kFeaturesPerAction = 6;
  using Features = std::array<std::uint32_t, kFeaturesPerAction>;
  Features features(const EnvState& state, Action action) const;
  double q_value(const EnvState& state, Action action) const;
  // Highest-valued legal action, lowest index on ties.
  Action greedy_action(const EnvState& state) const;

  const std::vector<double>& weights() const { return weights_; }
  const QConfig& config() const { return config_; }

  void save_checkpoint(const std::filesystem::path& dir) const override;
  void load_checkpoint(const std::filesystem::path& dir) override;

 private:
  double max_q(const EnvState& state) const;

  QConfig config_;
  std::vector<double> weights_;
  std::uint64_t version_ = 0;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::QLinear;
  ScheduleConfig schedule;
  QConfig q;
};

std::unique_ptr<Learner> make_learner(const LearnerConfig& config);

}  // namespace alplab
