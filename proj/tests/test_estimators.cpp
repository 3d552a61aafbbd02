#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "alplab/errors.hpp"
#include "alplab/estimators.hpp"
#include "alplab/learners.hpp"
#include "helpers.hpp"

using namespace alplab;

namespace {

struct Space {
  GoalSpace space = generate(GenerationConfig{500, 100, {0.5, 0.2, 0.15, 0.1, 0.05}, 21}, test::vocab());
  std::shared_ptr<const GoalCatalog> catalog = GoalCatalog::build(space);
  std::vector<GoalId> train = space.ids(Split::Train);
};

const Space& fixture() {
  static const Space s;
  return s;
}

// Direct recomputation of the moving-average rule.
double mb_oracle(const std::vector<int>& outcomes, double alpha, std::size_t n) {
  double u = 0.0;
  for (std::size_t t = 0; t < outcomes.size(); ++t) {
    const std::size_t from = t > n ? t - n : 0;
    double lp = 0.0;
    for (std::size_t k = from; k < t; ++k) lp += std::abs(outcomes[t] - outcomes[k]);
    if (t > from) lp /= static_cast<double>(t - from);
    u = alpha * u + (1 - alpha) * lp;
  }
  return u;
}

EstimatorConfig magellan_config(std::size_t snapshots, std::int64_t period) {
  EstimatorConfig c;
  c.kind = EstimatorKind::Magellan;
  c.seed = 5;
  c.magellan_snapshot_capacity = snapshots;
  c.magellan_update_period = period;
  c.magellan_batch_size = 16;
  c.magellan_embed_dim = 8;
  c.magellan_hidden = 16;
  c.magellan_learning_rate = 1e-2;
  return c;
}

}  // namespace

TEST_CASE("moving-average update reproduces the hand computation") {
  const std::vector<std::uint8_t> h{1, 0};
  CHECK(std::abs(MbEstimator::update_utility(0.2, h, 1, 0.3) - 0.41) < 1e-12);
  CHECK(MbEstimator::update_utility(0.5, {}, 0, 0.3) == doctest::Approx(0.15));
  const std::vector<std::uint8_t> ones(10, 1);
  double u = 0.8;
  for (int i = 0; i < 5; ++i) u = MbEstimator::update_utility(u, ones, 1, 0.3);
  CHECK(u == doctest::Approx(0.8 * std::pow(0.3, 5)));
}

TEST_CASE("moving-average estimator matches a recomputation oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    MbEstimator est(4, 7, 0.3);
    std::vector<int> outcomes;
    for (int t = 0; t < 60; ++t) {
      const int o = static_cast<int>(rng() % 2);
      outcomes.push_back(o);
      est.observe(2, o, t);
    }
    CHECK(std::abs(est.alp(2) - mb_oracle(outcomes, 0.3, 7)) < 1e-12);
    CHECK(est.alp(1) == 0.0);
  }
}

TEST_CASE("outcome buffer halves") {
  OutcomeBuffer b(100);
  CHECK(b.alp() == 0.0);
  b.push(1);
  CHECK(b.alp() == 0.0);
  for (int i = 0; i < 50; ++i) b.push(0);
  for (int i = 0; i < 50; ++i) b.push(1);
  CHECK(b.size() == 100);  // the first 1 fell out
  CHECK(b.alp() == 1.0);
  CHECK(b.recent_mean() == 1.0);

  OutcomeBuffer odd(10);
  for (int o : {0, 0, 1, 1, 1}) odd.push(o);  // newest 3 = {1,1,1}, oldest 2 = {0,0}
  CHECK(odd.recent_mean() == 1.0);
  CHECK(odd.alp() == 1.0);
  CHECK_THROWS_AS(odd.push(2), ValidationError);
}

TEST_CASE("online estimators are keyed per goal or per bucket") {
  const auto& f = fixture();
  OnlineEstimator per_goal(f.catalog, 100, false);
  OnlineEstimator per_bucket(f.catalog, 100, true);
  const auto grasp = f.space.ids(Split::Train, Category::Grasp);
  const auto plant = f.space.ids(Split::Train, Category::GrowPlant);
  for (int i = 0; i < 10; ++i) {
    per_goal.observe(grasp[0], 1, i);
    per_bucket.observe(grasp[0], 1, i);
  }
  CHECK(per_goal.competence(grasp[0]) == 1.0);
  CHECK(per_goal.competence(grasp[1]) == 0.0);
  CHECK(per_bucket.competence(grasp[1]) == 1.0);
  CHECK(per_bucket.competence(plant[0]) == 0.0);
  CHECK(per_bucket.alp(grasp[3]) == per_bucket.alp(grasp[0]));
  CHECK(per_goal.needs_evaluation(1000) == std::nullopt);
  CHECK(per_goal.evaluation_cost() == 0);
}

TEST_CASE("ek-eval sweeps cost 2048 per bucket and match the expert") {
  const auto& f = fixture();
  EvalEstimator est(f.catalog, f.train, true, 1000, 2048, 1);
  CHECK_FALSE(est.needs_evaluation(999));
  CHECK_FALSE(est.needs_evaluation(0));
  auto req = est.needs_evaluation(1000);
  REQUIRE(req);
  CHECK(req->goals.size() == 5 * 2048);

  ExpertLearner expert;
  Rng rng(1);
  std::vector<int> outcomes;
  for (GoalId g : req->goals) outcomes.push_back(expert.eval_episode(f.space.goal(g), rng));
  CHECK(expert.version() == 0);
  est.ingest_evaluation(*req, outcomes);
  CHECK(est.evaluation_cost() == 10'240);
  CHECK(est.competence(f.space.ids(Split::Train, Category::Grasp)[0]) == 1.0);
  CHECK(est.competence(f.space.ids(Split::Train, Category::Impossible)[0]) == 0.0);
  CHECK(est.alp(f.space.ids(Split::Train, Category::Grasp)[0]) == 1.0);
}

TEST_CASE("per-goal eval cost is pool size times k") {
  const auto& f = fixture();
  EvalEstimator est(f.catalog, f.train, false, 1000, 2, 1);
  for (std::int64_t ep = 1000; ep <= 3000; ep += 1000) {
    auto req = est.needs_evaluation(ep);
    REQUIRE(req);
    est.ingest_evaluation(*req, std::vector<int>(req->goals.size(), 0));
  }
  CHECK(est.evaluation_cost() == 3 * 2 * static_cast<std::int64_t>(f.train.size()));
  CHECK(est.sweeps() == 3);
}

TEST_CASE("magellan sampling weights and snapshot counting") {
  const auto w = MagellanEstimator::recency_weights(4);
  REQUIRE(w.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(0.1 * (i + 1)));

  const auto& f = fixture();
  MagellanEstimator est(f.catalog, magellan_config(100, 32));
  for (GoalId g : f.train) CHECK(est.alp(g) == 0.0);
  for (std::int64_t ep = 0; ep < 320; ++ep)
    est.observe(f.train[static_cast<std::size_t>(ep) % f.train.size()], ep % 3 == 0, ep);
  CHECK(est.snapshot_count() == 10);
  CHECK(est.updates() == 10);
  CHECK(est.evaluation_cost() == 0);
  for (GoalId g : f.train) {
    CHECK(est.alp(g) >= 0.0);
    CHECK(est.alp(g) <= 1.0);
  }
}

TEST_CASE("magellan with one snapshot and period one tracks the last step") {
  const auto& f = fixture();
  MagellanEstimator est(f.catalog, magellan_config(1, 1));
  const GoalId g = f.train[0];
  for (std::int64_t ep = 0; ep < 5; ++ep) {
    MagellanEstimator before = *static_cast<MagellanEstimator*>(est.clone().get());
    est.observe(g, 1, ep);
    CHECK(est.alp(g) == doctest::Approx(std::abs(est.competence(g) - before.competence(g))).epsilon(1e-12));
  }
}

TEST_CASE("magellan learns a grasp-versus-impossible split from a simulated stream") {
  const auto& f = fixture();
  EstimatorConfig cfg = magellan_config(100, 32);
  cfg.magellan_batch_size = 256;
  cfg.magellan_embed_dim = 32;
  cfg.magellan_hidden = 64;
  cfg.magellan_learning_rate = 3e-3;
  cfg.magellan_steps_per_update = 4;
  MagellanEstimator est(f.catalog, cfg);
  Rng rng(2);
  for (std::int64_t ep = 0; ep < 6000; ++ep) {
    const GoalId g = f.train[uniform_index(rng, f.train.size())];
    est.observe(g, f.space.goal(g).category == Category::Grasp ? 1 : 0, ep);
  }
  auto mean = [&](Category c) {
    double s = 0.0;
    const auto ids = f.space.ids(Split::Train, c);
    for (GoalId g : ids) s += est.competence(g);
    return s / static_cast<double>(ids.size());
  };
  CHECK(mean(Category::Grasp) > mean(Category::Impossible) + 0.3);
}

TEST_CASE("estimator checkpoints round trip") {
  const auto& f = fixture();
  const auto dir = test::scratch_dir("estimators");
  Rng rng(4);
  for (auto kind : {EstimatorKind::MB, EstimatorKind::Online, EstimatorKind::EkOnline, EstimatorKind::Eval,
                    EstimatorKind::EkEval, EstimatorKind::Magellan}) {
    EstimatorConfig cfg = magellan_config(10, 8);
    cfg.kind = kind;
    cfg.eval_frequency = 50;
    cfg.eval_per_bucket = 20;
    auto a = make_estimator(cfg, f.catalog, f.train);
    auto b = make_estimator(cfg, f.catalog, f.train);
    for (std::int64_t ep = 0; ep < 120; ++ep) {
      const GoalId g = f.train[uniform_index(rng, f.train.size())];
      a->observe(g, static_cast<int>(rng() % 2), ep);
      if (auto req = a->needs_evaluation(ep + 1))
        a->ingest_evaluation(*req, std::vector<int>(req->goals.size(), 1));
    }
    const auto sub = dir / std::string(to_string(kind));
    a->save_checkpoint(sub);
    b->load_checkpoint(sub);
    for (GoalId g : f.train) {
      CHECK(a->competence(g) == b->competence(g));
      CHECK(a->alp(g) == b->alp(g));
    }
    CHECK(a->evaluation_cost() == b->evaluation_cost());
    // Continuing both gives identical results.
    for (std::int64_t ep = 120; ep < 140; ++ep) {
      a->observe(f.train[0], 1, ep);
      b->observe(f.train[0], 1, ep);
    }
    CHECK(a->alp(f.train[0]) == b->alp(f.train[0]));
  }
  auto online = make_estimator(EstimatorConfig{EstimatorKind::Online}, f.catalog, f.train);
  CHECK_THROWS_AS(online->load_checkpoint(dir / "mb"), ValidationError);
}

TEST_CASE("competence error against a reference") {
  const auto& f = fixture();
  OnlineEstimator est(f.catalog, 100, true);
  const auto grasp = f.space.ids(Split::Train, Category::Grasp);
  for (int i = 0; i < 100; ++i) est.observe(grasp[0], i % 2, i);
  std::array<std::vector<GoalId>, kCategoryCount> goals;
  goals[category_index(Category::Grasp)] = {grasp[0], grasp[1]};
  goals[category_index(Category::GrowPlant)] = f.space.ids(Split::Train, Category::GrowPlant);
  std::array<double, kCategoryCount> ref{0, 1.0, 0.98, 0, 0};
  const auto e = competence_error(est, goals, ref, kAllCategories);
  CHECK(e.per_category[category_index(Category::Grasp)] == doctest::Approx(0.5));
  CHECK(e.per_category[category_index(Category::GrowPlant)] == doctest::Approx(0.98));
  CHECK_FALSE(e.present[category_index(Category::Impossible)]);
  CHECK(e.macro == doctest::Approx((0.5 + 0.98) / 2));
}

TEST_CASE("competence error is zero against itself") {
  const auto& f = fixture();
  OnlineEstimator est(f.catalog, 100, true);
  const auto grasp = f.space.ids(Split::Train, Category::Grasp);
  for (int i = 0; i < 10; ++i) est.observe(grasp[0], 1, i);
  std::array<std::vector<GoalId>, kCategoryCount> goals;
  goals[category_index(Category::Grasp)] = grasp;
  goals[category_index(Category::Impossible)] = f.space.ids(Split::Train, Category::Impossible);
  const auto e = competence_error(est, goals, {0.0, 1.0, 0, 0, 0}, kAllCategories);
  CHECK(e.macro == 0.0);
}

TEST_CASE("expert-knowledge estimators share estimates within a bucket and nowhere else") {
  const auto& f = fixture();
  for (auto kind : {EstimatorKind::EkOnline, EstimatorKind::Online, EstimatorKind::MB}) {
    EstimatorConfig cfg;
    cfg.kind = kind;
    auto est = make_estimator(cfg, f.catalog, f.train);
    const auto grasp = f.space.ids(Split::Train, Category::Grasp);
    const auto plant = f.space.ids(Split::Train, Category::GrowPlant);
    Rng rng(6);
    for (int i = 0; i < 40; ++i) est->observe(plant[0], static_cast<int>(rng() % 2), i);
    const double pc = est->competence(plant[1]), pa = est->alp(plant[1]);
    const double gc = est->competence(grasp[0]), ga = est->alp(grasp[0]);
    for (int i = 40; i < 80; ++i) est->observe(grasp[0], i % 3 == 0, i);
    // Another bucket, or another goal for per-goal estimators, is untouched.
    CHECK(est->competence(plant[1]) == pc);
    CHECK(est->alp(plant[1]) == pa);
    if (kind == EstimatorKind::EkOnline) {
      CHECK(est->competence(grasp[1]) == est->competence(grasp[0]));
      CHECK(est->alp(grasp[1]) == est->alp(grasp[0]));
      CHECK(est->competence(grasp[1]) != gc);
    } else {
      CHECK(est->competence(grasp[1]) == gc);
      CHECK(est->alp(grasp[1]) == ga);
    }
  }
}

TEST_CASE("estimators are deterministic given the seed and the stream") {
  const auto& f = fixture();
  for (auto kind : {EstimatorKind::MB, EstimatorKind::Online, EstimatorKind::EkOnline, EstimatorKind::Eval,
                    EstimatorKind::EkEval, EstimatorKind::Magellan}) {
    EstimatorConfig cfg = magellan_config(20, 16);
    cfg.kind = kind;
    cfg.eval_frequency = 100;
    cfg.eval_per_bucket = 16;
    auto a = make_estimator(cfg, f.catalog, f.train);
    auto b = make_estimator(cfg, f.catalog, f.train);
    Rng rng(9);
    for (std::int64_t ep = 0; ep < 400; ++ep) {
      const GoalId g = f.train[uniform_index(rng, f.train.size())];
      const int o = static_cast<int>(rng() % 2);
      a->observe(g, o, ep);
      b->observe(g, o, ep);
      auto ra = a->needs_evaluation(ep + 1);
      auto rb = b->needs_evaluation(ep + 1);
      REQUIRE(ra.has_value() == rb.has_value());
      if (ra) {
        CHECK(ra->goals == rb->goals);
        std::vector<int> outs(ra->goals.size());
        for (auto& x : outs) x = static_cast<int>(rng() % 2);
        a->ingest_evaluation(*ra, outs);
        b->ingest_evaluation(*rb, outs);
      }
    }
    for (GoalId g : f.train) {
      CHECK(a->alp(g) == b->alp(g));
      CHECK(a->competence(g) == b->competence(g));
      CHECK(a->alp(g) >= 0.0);
      CHECK(a->alp(g) <= 1.0);
    }
  }
}

TEST_CASE("magellan alp is higher on a category that is being learned") {
  const auto& f = fixture();
  EstimatorConfig cfg = magellan_config(100, 32);
  cfg.magellan_batch_size = 256;
  cfg.magellan_embed_dim = 32;
  cfg.magellan_hidden = 64;
  cfg.magellan_learning_rate = 3e-3;
  cfg.magellan_steps_per_update = 4;
  MagellanEstimator est(f.catalog, cfg);
  Rng rng(12);
  const std::int64_t ramp = 4000;
  for (std::int64_t ep = 0; ep < ramp; ++ep) {
    const GoalId g = f.train[uniform_index(rng, f.train.size())];
    const double p = f.space.goal(g).category == Category::Grasp ? static_cast<double>(ep) / ramp : 0.0;
    est.observe(g, uniform01(rng) < p, ep);
  }
  auto mean_alp = [&](Category c) {
    double s = 0.0;
    const auto ids = f.space.ids(Split::Train, c);
    for (GoalId g : ids) s += est.alp(g);
    return s / static_cast<double>(ids.size());
  };
  CHECK(mean_alp(Category::Grasp) > mean_alp(Category::Impossible));
}
