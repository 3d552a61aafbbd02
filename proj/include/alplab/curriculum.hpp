#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "alplab/estimators.hpp"
#include "alplab/rng.hpp"

namespace alplab {

enum class SelectionMode { PerGoal, PerBucket, Uniform };
std::string_view to_string(SelectionMode mode);
SelectionMode parse_selection_mode(std::string_view text);

struct SelectorConfig {
  double epsilon_start = 1.0;
  double epsilon_end = 0.2;
  std::int64_t decay_horizon = 320 * 32;  // 320 estimator updates of 32 episodes
  SelectionMode mode = SelectionMode::PerGoal;

  void validate() const;
};

// Linear from epsilon_start at episode 0 to epsilon_end at decay_horizon.
double epsilon(const SelectorConfig& config, std::int64_t episode);

struct SelectionEvent {
  std::int64_t episode = 0;
  GoalId goal = 0;
  double epsilon = 1.0;
  bool exploratory = true;
  double alp = 0.0;  // estimator ALP of the chosen goal at selection time
  std::uint64_t alp_checksum = 0;
};

// FNV-1a over the bit patterns of the ALP values.
std::uint64_t alp_checksum(std::span<const double> alp);

class GoalSelector {
 public:
  GoalSelector(SelectorConfig config, std::span<const GoalId> pool,
               std::span<const Category> buckets_of_pool);

  const SelectorConfig& config() const { return config_; }
  std::span<const GoalId> pool() const { return pool_; }

  // Draws one goal. `estimator` may be null only in Uniform mode.
  SelectionEvent select(const AlpEstimator* estimator, std::int64_t episode, Rng& rng);

  // ALP-proportional draw from a fixed vector, uniform when it sums to zero.
  static std::size_t draw_proportional(std::span<const double> weights, Rng& rng);

 private:
  SelectorConfig config_;
  std::vector<GoalId> pool_;
  std::array<std::vector<std::size_t>, kCategoryCount> members_;  // pool positions per bucket
  std::vector<int> nonempty_buckets_;
  std::vector<double> alp_;
};

}  // namespace alplab
