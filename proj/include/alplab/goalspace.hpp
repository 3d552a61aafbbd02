#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alplab/env.hpp"

namespace alplab {

enum class InfeasibilityReason : std::uint8_t {
  None,
  MissingTarget,
  GrowNonGrowable,
  MissingWater,
  MissingPlant,
  MissingHerbivore,
};
std::string_view to_string(InfeasibilityReason reason);
InfeasibilityReason parse_reason(std::string_view text);

struct Classification {
  Category category = Category::Impossible;
  InfeasibilityReason reason = InfeasibilityReason::None;

  bool feasible() const { return reason == InfeasibilityReason::None; }
  bool operator==(const Classification&) const = default;
};

// Rule-based feasibility. The first failing prerequisite, in the order
// target, growability, water, plant seed, baby herbivore, is the reason.
// Throws ConfigError when a name is outside the vocabulary.
Classification classify(const Vocabulary& vocab, const Instruction& instruction,
                        const SceneSpec& scene);
Classification classify(const Vocabulary& vocab, const Goal& goal);

struct BfsResult {
  bool feasible = false;
  std::optional<int> depth;  // shortest successful action sequence
  std::size_t states_expanded = 0;
};

// Exhaustive search over all 8 actions from reset(goal), bounded by the
// goal's step budget (or an explicit override).
BfsResult feasible_bfs(const Goal& goal);
BfsResult feasible_bfs(const Goal& goal, int budget);

// verbs x names^5: the instruction target plus four scene slots.
std::uint64_t total_goal_count(std::uint64_t names, std::uint64_t verbs = 2);
std::uint64_t total_goal_count(const Vocabulary& vocab);

enum class Split : std::uint8_t { Train, Test };
std::string_view to_string(Split split);

struct GenerationConfig {
  std::int64_t train_goals = 25'000;
  std::int64_t test_goals = 0;
  // Indexed by Category: impossible, grasp, grow plant, grow herbivore, grow carnivore.
  std::array<double, kCategoryCount> proportions = {0.80, 0.16, 0.032, 0.007, 0.001};
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-category counts for a split: floor(p * total) for feasible categories,
// remainder to Impossible.
std::array<std::int64_t, kCategoryCount> category_quotas(
    std::int64_t total, const std::array<double, kCategoryCount>& proportions);

class GoalSpace {
 public:
  GoalSpace(Vocabulary vocab, GenerationConfig config);

  const Vocabulary& vocabulary() const { return vocab_; }
  const GenerationConfig& config() const { return config_; }
  // Goal ids are dense: goals()[i].id == i.
  const std::vector<Goal>& goals() const { return goals_; }
  const Goal& goal(GoalId id) const { return goals_.at(static_cast<std::size_t>(id)); }
  Split split(GoalId id) const { return splits_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return goals_.size(); }

  std::vector<GoalId> ids(Split split) const;
  std::vector<GoalId> ids(Split split, Category category) const;

  // Appends with the next dense id; validates scene and category agreement.
  GoalId add(Instruction instruction, SceneSpec scene, Split split);

  // Throws ValidationError on any invariant violation (classification
  // mismatch, duplicate goals, overlapping splits).
  void validate() const;

 private:
  Vocabulary vocab_;
  GenerationConfig config_;
  std::vector<Goal> goals_;
  std::vector<Split> splits_;
};

// Quota-based rejection sampling from the uniform distribution over
// (verb, target, 4 distinct scene names). Throws GenerationError when a
// quota cannot be filled.
GoalSpace generate(const GenerationConfig& config, const Vocabulary& vocab);

inline constexpr int kGoalSpaceFormatVersion = 1;

void save(const GoalSpace& space, const std::filesystem::path& path);
GoalSpace load(const std::filesystem::path& path);

}  // namespace alplab
