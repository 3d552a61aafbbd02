#include "alplab/curriculum.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include <fmt/format.h>

#include "alplab/errors.hpp"

namespace alplab {

std::string_view to_string(SelectionMode mode) {
  switch (mode) {
    case SelectionMode::PerGoal: return "per-goal";
    case SelectionMode::PerBucket: return "per-bucket";
    case SelectionMode::Uniform: return "uniform";
  }
  return "?";
}

SelectionMode parse_selection_mode(std::string_view text) {
  for (auto m : {SelectionMode::PerGoal, SelectionMode::PerBucket, SelectionMode::Uniform})
    if (to_string(m) == text) return m;
  throw ConfigError(fmt::format("unknown selection mode '{}'", text));
}

void SelectorConfig::validate() const {
  if (!(0.0 <= epsilon_end && epsilon_end <= epsilon_start && epsilon_start <= 1.0))
    throw ConfigError("selector requires 0 <= epsilon_end <= epsilon_start <= 1");
  if (decay_horizon < 0) throw ConfigError("decay_horizon must be nonnegative");
}

double epsilon(const SelectorConfig& c, std::int64_t episode) {
  if (episode >= c.decay_horizon) return c.epsilon_end;
  if (episode <= 0) return c.epsilon_start;
  const double f = static_cast<double>(episode) / static_cast<double>(c.decay_horizon);
  return c.epsilon_start + f * (c.epsilon_end - c.epsilon_start);
}

std::uint64_t alp_checksum(std::span<const double> alp) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : alp) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

GoalSelector::GoalSelector(SelectorConfig config, std::span<const GoalId> pool,
                           std::span<const Category> buckets_of_pool)
    : config_(config), pool_(pool.begin(), pool.end()) {
  config_.validate();
  if (pool_.empty()) throw ConfigError("goal selector needs a nonempty goal pool");
  if (buckets_of_pool.size() != pool_.size())
    throw UsageError("bucket labels must match the goal pool");
  for (std::size_t i = 0; i < pool_.size(); ++i)
    members_[category_index(buckets_of_pool[i])].push_back(i);
  for (int b = 0; b < kCategoryCount; ++b)
    if (!members_[b].empty()) nonempty_buckets_.push_back(b);
  alp_.resize(pool_.size());
}

std::size_t GoalSelector::draw_proportional(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) return uniform_index(rng, weights.size());
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u at the very top; return the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

SelectionEvent GoalSelector::select(const AlpEstimator* estimator, std::int64_t episode,
                                    Rng& rng) {
  SelectionEvent ev;
  ev.episode = episode;
  if (config_.mode == SelectionMode::Uniform || estimator == nullptr) {
    if (config_.mode != SelectionMode::Uniform)
      throw UsageError("ALP-driven selection needs an estimator");
    ev.epsilon = 1.0;
    ev.exploratory = true;
    ev.goal = pool_[uniform_index(rng, pool_.size())];
    if (estimator) ev.alp = estimator->alp(ev.goal);
    return ev;
  }

  ev.epsilon = epsilon(config_, episode);
  estimator->alp_many(pool_, alp_);
  ev.alp_checksum = alp_checksum(alp_);
  ev.exploratory = uniform01(rng) < ev.epsilon;

  std::size_t pos = 0;
  if (config_.mode == SelectionMode::PerGoal) {
    pos = ev.exploratory ? uniform_index(rng, pool_.size()) : draw_proportional(alp_, rng);
  } else {
    std::size_t b = 0;
    if (ev.exploratory) {
      b = uniform_index(rng, nonempty_buckets_.size());
    } else {
      std::vector<double> bucket_alp;
      for (int k : nonempty_buckets_) {
        double s = 0.0;
        for (std::size_t i : members_[k]) s += alp_[i];
        bucket_alp.push_back(s / static_cast<double>(members_[k].size()));
      }
      b = draw_proportional(bucket_alp, rng);
    }
    const auto& m = members_[nonempty_buckets_[b]];
    pos = m[uniform_index(rng, m.size())];
  }
  ev.goal = pool_[pos];
  ev.alp = alp_[pos];
  return ev;
}

}  // namespace alplab
