#include <doctest.h>

#include <map>

#include "alplab/curriculum.hpp"
#include "alplab/errors.hpp"
#include "alplab/stats.hpp"

using namespace alplab;

namespace {

// Fixed per-goal ALP values.
class FixedAlp final : public AlpEstimator {
 public:
  explicit FixedAlp(std::vector<double> alp) : alp_(std::move(alp)) {}
  EstimatorKind kind() const override { return EstimatorKind::Online; }
  std::unique_ptr<AlpEstimator> clone() const override { return std::make_unique<FixedAlp>(*this); }
  void observe(GoalId, int, std::int64_t) override {}
  double competence(GoalId) const override { return 0.0; }
  double alp(GoalId g) const override { return alp_.at(static_cast<std::size_t>(g)); }
  void save_checkpoint(const std::filesystem::path&) const override {}
  void load_checkpoint(const std::filesystem::path&) override {}

 private:
  std::vector<double> alp_;
};

std::vector<std::int64_t> draw_counts(GoalSelector& sel, const AlpEstimator* est, std::size_t n,
                                      int draws, std::int64_t episode, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::int64_t> counts(n);
  for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(sel.select(est, episode, rng).goal)];
  return counts;
}

}  // namespace

TEST_CASE("epsilon decays linearly to its floor") {
  SelectorConfig c;
  CHECK(epsilon(c, 0) == 1.0);
  CHECK(epsilon(c, c.decay_horizon / 2) == doctest::Approx(0.6));
  CHECK(epsilon(c, c.decay_horizon) == 0.2);
  CHECK(epsilon(c, c.decay_horizon * 10) == 0.2);
  c.epsilon_end = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("greedy per-goal draws follow the ALP proportions") {
  const std::vector<GoalId> pool{0, 1, 2};
  const std::vector<Category> buckets(3, Category::Grasp);
  SelectorConfig c;
  c.epsilon_start = c.epsilon_end = 0.0;
  GoalSelector sel(c, pool, buckets);
  FixedAlp est({0.2, 0.2, 0.6});
  const auto counts = draw_counts(sel, &est, 3, 100'000, 0, 7);
  const auto r = chi_square_gof(counts, std::vector<double>{0.2, 0.2, 0.6});
  CHECK(r.p_value > 0.01);
}

TEST_CASE("exploration mixes uniform and proportional draws") {
  const std::vector<GoalId> pool{0, 1, 2, 3};
  const std::vector<Category> buckets(4, Category::Grasp);
  SelectorConfig c;
  GoalSelector sel(c, pool, buckets);
  FixedAlp est({0.0, 0.1, 0.3, 0.6});
  const double eps = epsilon(c, c.decay_horizon / 2);
  std::vector<double> expected;
  for (double a : {0.0, 0.1, 0.3, 0.6}) expected.push_back(eps / 4 + (1 - eps) * a);
  const auto counts = draw_counts(sel, &est, 4, 100'000, c.decay_horizon / 2, 8);
  CHECK(chi_square_gof(counts, expected).p_value > 0.01);
}

TEST_CASE("all-zero ALP falls back to uniform") {
  const std::vector<GoalId> pool{0, 1, 2, 3, 4};
  const std::vector<Category> buckets(5, Category::Grasp);
  SelectorConfig c;
  c.epsilon_start = c.epsilon_end = 0.0;
  GoalSelector sel(c, pool, buckets);
  FixedAlp est(std::vector<double>(5, 0.0));
  const auto counts = draw_counts(sel, &est, 5, 50'000, 0, 9);
  CHECK(chi_square_gof(counts, std::vector<double>(5, 1.0)).p_value > 0.01);
}

TEST_CASE("uniform mode ignores the estimator and needs none") {
  const std::vector<GoalId> pool{0, 1, 2};
  const std::vector<Category> buckets(3, Category::Grasp);
  SelectorConfig c;
  c.mode = SelectionMode::Uniform;
  GoalSelector sel(c, pool, buckets);
  const auto counts = draw_counts(sel, nullptr, 3, 30'000, 0, 10);
  CHECK(chi_square_gof(counts, std::vector<double>(3, 1.0)).p_value > 0.01);

  SelectorConfig g;
  GoalSelector needs(g, pool, buckets);
  Rng rng(1);
  CHECK_THROWS_AS(needs.select(nullptr, 0, rng), UsageError);
}

TEST_CASE("per-bucket selection is uniform within the chosen bucket") {
  // Bucket Grasp has 4 goals with ALP 1, bucket GrowPlant has 1 goal with ALP 0.
  const std::vector<GoalId> pool{0, 1, 2, 3, 4};
  const std::vector<Category> buckets{Category::Grasp, Category::Grasp, Category::Grasp,
                                      Category::Grasp, Category::GrowPlant};
  SelectorConfig c;
  c.mode = SelectionMode::PerBucket;
  c.epsilon_start = c.epsilon_end = 0.0;
  GoalSelector sel(c, pool, buckets);
  FixedAlp est({1.0, 1.0, 1.0, 1.0, 0.0});
  const auto counts = draw_counts(sel, &est, 5, 40'000, 0, 11);
  CHECK(counts[4] == 0);
  CHECK(chi_square_gof(std::span(counts).first(4), std::vector<double>(4, 1.0)).p_value > 0.01);

  // Fully exploratory: each nonempty bucket 1/2, then 1/|bucket|.
  SelectorConfig e;
  e.mode = SelectionMode::PerBucket;
  GoalSelector explore(e, pool, buckets);
  const auto ec = draw_counts(explore, &est, 5, 40'000, 0, 12);
  CHECK(chi_square_gof(ec, std::vector<double>{0.125, 0.125, 0.125, 0.125, 0.5}).p_value > 0.01);
}

TEST_CASE("selection is deterministic and records the ALP checksum") {
  const std::vector<GoalId> pool{0, 1, 2};
  const std::vector<Category> buckets(3, Category::Grasp);
  SelectorConfig c;
  GoalSelector a(c, pool, buckets), b(c, pool, buckets);
  FixedAlp est({0.5, 0.25, 0.25});
  Rng ra(3), rb(3);
  for (int i = 0; i < 200; ++i) {
    const auto x = a.select(&est, i, ra);
    const auto y = b.select(&est, i, rb);
    CHECK(x.goal == y.goal);
    CHECK(x.exploratory == y.exploratory);
    CHECK(x.alp == est.alp(x.goal));
    CHECK(x.alp_checksum == alp_checksum(std::vector<double>{0.5, 0.25, 0.25}));
  }
  CHECK(alp_checksum(std::vector<double>{0.5}) != alp_checksum(std::vector<double>{0.25}));
}

TEST_CASE("selector rejects empty pools and mismatched labels") {
  SelectorConfig c;
  CHECK_THROWS_AS(GoalSelector(c, std::vector<GoalId>{}, std::vector<Category>{}), ConfigError);
  CHECK_THROWS_AS(GoalSelector(c, std::vector<GoalId>{0}, std::vector<Category>{}), UsageError);
}
