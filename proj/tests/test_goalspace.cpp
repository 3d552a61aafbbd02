#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

#include "alplab/errors.hpp"
#include "alplab/goalspace.hpp"
#include "alplab/stats.hpp"
#include "helpers.hpp"

using namespace alplab;

namespace {

Classification cls(Verb v, const std::string& target, const std::vector<std::string>& scene) {
  return classify(test::vocab(), make_instruction(test::vocab(), v, target), test::scene(scene));
}

std::string key(const Goal& g) {
  std::string k = std::string(to_string(g.instruction.verb)) + " " + g.instruction.target + ":";
  for (const auto& e : g.scene.slots) k += " " + e.name;
  return k;
}

}  // namespace

TEST_CASE("total goal count") {
  CHECK(total_goal_count(test::vocab()) == 19'531'250);
  CHECK(total_goal_count(5) == 6'250);
  CHECK(total_goal_count(0) == 0);
}

TEST_CASE("classification examples") {
  CHECK(cls(Verb::Grasp, "rabbit", {"bookshelf", "lion", "desk", "cow"}) ==
        Classification{Category::Impossible, InfeasibilityReason::MissingTarget});
  CHECK(cls(Verb::Grow, "coyote", {"water", "elephant", "coyote", "cow"}) ==
        Classification{Category::Impossible, InfeasibilityReason::MissingPlant});
  CHECK(cls(Verb::Grow, "deer", {"deer", "bookshelf", "water", "tomato"}) ==
        Classification{Category::GrowHerbivore, InfeasibilityReason::None});
  CHECK(cls(Verb::Grow, "desk", {"desk", "bookshelf", "water", "tomato"}) ==
        Classification{Category::Impossible, InfeasibilityReason::GrowNonGrowable});
  CHECK(cls(Verb::Grow, "cucumber", {"cucumber", "carrot", "coyote", "wolf"}) ==
        Classification{Category::Impossible, InfeasibilityReason::MissingWater});
  CHECK(cls(Verb::Grow, "lion", {"water", "carrot", "lion", "bed"}).reason ==
        InfeasibilityReason::MissingHerbivore);
  CHECK(cls(Verb::Grasp, "water", {"water", "carrot", "lion", "bed"}).category == Category::Grasp);
  CHECK_THROWS_AS(classify(test::vocab(), Instruction{Verb::Grasp, "unicorn", ElementKind::Furniture},
                           test::scene({"water", "carrot", "lion", "bed"})),
                  ConfigError);
}

TEST_CASE("exhaustive search agrees with the rules") {
  CHECK_FALSE(feasible_bfs(test::goal(Verb::Grow, "cucumber", {"cucumber", "carrot", "coyote", "wolf"})).feasible);
  const auto carn = feasible_bfs(test::goal(Verb::Grow, "lion", {"water", "carrot", "lion", "cow"}));
  CHECK(carn.feasible);
  CHECK(carn.depth == 10);
  CHECK_FALSE(feasible_bfs(test::goal(Verb::Grasp, "bed", {"water", "bed", "desk", "cow"}), 0).feasible);

  const GoalSpace space = generate(GenerationConfig{600, 0, {0.5, 0.2, 0.15, 0.1, 0.05}, 11}, test::vocab());
  for (const auto& g : space.goals()) {
    const auto r = feasible_bfs(g);
    CHECK(r.feasible == g.feasible);
    if (g.feasible) CHECK(*r.depth == minimal_steps(g.category));
  }
}

TEST_CASE("quotas follow the proportions") {
  const auto q = category_quotas(25'000, GenerationConfig{}.proportions);
  CHECK(q == std::array<std::int64_t, kCategoryCount>{20'000, 4'000, 800, 175, 25});
}

TEST_CASE("generation is seeded, disjoint across splits and classified") {
  const GenerationConfig cfg{2'000, 500, GenerationConfig{}.proportions, 3};
  const GoalSpace a = generate(cfg, test::vocab());
  const GoalSpace b = generate(cfg, test::vocab());
  REQUIRE(a.size() == 2'500);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(key(a.goals()[i]) == key(b.goals()[i]));
  a.validate();

  std::set<std::string> train, test;
  for (GoalId id : a.ids(Split::Train)) train.insert(key(a.goal(id)));
  for (GoalId id : a.ids(Split::Test)) test.insert(key(a.goal(id)));
  CHECK(train.size() == 2'000);
  CHECK(test.size() == 500);
  for (const auto& k : test) CHECK(train.count(k) == 0);

  CHECK(a.ids(Split::Train, Category::GrowCarnivore).size() == 2);
  CHECK(a.ids(Split::Train, Category::GrowHerbivore).size() == 14);
  CHECK(a.ids(Split::Test, Category::Grasp).size() == 80);
}

TEST_CASE("the 25k space has the expected category counts") {
  const GoalSpace s = generate(GenerationConfig{}, test::vocab());
  std::array<std::size_t, kCategoryCount> counts{};
  for (const auto& g : s.goals()) ++counts[category_index(g.category)];
  CHECK(counts == std::array<std::size_t, kCategoryCount>{20'000, 4'000, 800, 175, 25});
}

TEST_CASE("generation samples uniformly within a category") {
  const Vocabulary tiny({{ElementKind::Furniture, {"desk"}},
                         {ElementKind::Plant, {"tomato"}},
                         {ElementKind::Herbivore, {"cow"}},
                         {ElementKind::Carnivore, {"lion"}},
                         {ElementKind::Water, {"water"}}});
  std::map<std::string, std::int64_t> counts;
  for (std::uint64_t seed = 0; seed < 2'000; ++seed) {
    const GoalSpace s = generate(GenerationConfig{10, 0, {0.5, 0.5, 0, 0, 0}, seed}, tiny);
    for (GoalId id : s.ids(Split::Train, Category::Grasp)) ++counts[key(s.goal(id))];
  }
  // 120 ordered scenes of 4 distinct names, 4 graspable targets each.
  CHECK(counts.size() == 480);
  std::vector<std::int64_t> observed;
  for (const auto& [k, n] : counts) observed.push_back(n);
  const std::vector<double> p(observed.size(), 1.0);
  CHECK(chi_square_gof(observed, p).p_value > 0.001);
}

TEST_CASE("unreachable quotas fail generation") {
  const Vocabulary tiny({{ElementKind::Furniture, {"desk"}},
                         {ElementKind::Plant, {"tomato"}},
                         {ElementKind::Herbivore, {"cow"}},
                         {ElementKind::Carnivore, {"lion"}},
                         {ElementKind::Water, {"water"}}});
  CHECK_THROWS_AS(generate(GenerationConfig{1'000, 0, {0.0, 1.0, 0, 0, 0}, 1}, tiny), GenerationError);
}

TEST_CASE("save and load round trip") {
  const auto dir = test::scratch_dir("goalspace");
  const GoalSpace s = generate(GenerationConfig{300, 100, GenerationConfig{}.proportions, 5}, test::vocab());
  save(s, dir / "space.jsonl");
  const GoalSpace t = load(dir / "space.jsonl");
  REQUIRE(t.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(key(s.goals()[i]) == key(t.goals()[i]));
    CHECK(s.goals()[i].category == t.goals()[i].category);
    CHECK(s.split(static_cast<GoalId>(i)) == t.split(static_cast<GoalId>(i)));
  }

  std::ifstream in(dir / "space.jsonl");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);

  {
    std::ofstream out(dir / "truncated.jsonl");
    out << lines[0] << '\n' << lines[1] << '\n' << lines[2].substr(0, lines[2].size() / 2) << '\n';
  }
  try {
    load(dir / "truncated.jsonl");
    FAIL("truncated file loaded");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("truncated.jsonl:3:") != std::string::npos);
  }

  // Flip a recorded verdict.
  std::size_t victim = 0;
  for (std::size_t i = 1; i < lines.size(); ++i)
    if (lines[i].find("\"feasible\":false") != std::string::npos) {
      victim = i;
      break;
    }
  REQUIRE(victim > 0);
  {
    std::ofstream out(dir / "tampered.jsonl");
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::string l = lines[i];
      if (i == victim) l.replace(l.find("\"feasible\":false"), 16, "\"feasible\":true");
      out << l << '\n';
    }
  }
  CHECK_THROWS_AS(load(dir / "tampered.jsonl"), ValidationError);
}
