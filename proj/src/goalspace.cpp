#include "alplab/goalspace.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "alplab/errors.hpp"

namespace alplab {

using nlohmann::json;

std::string_view to_string(InfeasibilityReason reason) {
  switch (reason) {
    case InfeasibilityReason::None: return "none";
    case InfeasibilityReason::MissingTarget: return "missing_target";
    case InfeasibilityReason::GrowNonGrowable: return "grow_non_growable";
    case InfeasibilityReason::MissingWater: return "missing_water";
    case InfeasibilityReason::MissingPlant: return "missing_plant";
    case InfeasibilityReason::MissingHerbivore: return "missing_herbivore";
  }
  return "?";
}

InfeasibilityReason parse_reason(std::string_view text) {
  for (auto r : {InfeasibilityReason::None, InfeasibilityReason::MissingTarget,
                 InfeasibilityReason::GrowNonGrowable, InfeasibilityReason::MissingWater,
                 InfeasibilityReason::MissingPlant, InfeasibilityReason::MissingHerbivore})
    if (to_string(r) == text) return r;
  throw ConfigError(fmt::format("unknown infeasibility reason '{}'", text));
}

std::string_view to_string(Split split) { return split == Split::Train ? "train" : "test"; }

// ---------------------------------------------------------------------------

Classification classify(const Vocabulary& vocab, const Instruction& instruction,
                        const SceneSpec& scene) {
  const ElementKind target_kind = vocab.require_kind(instruction.target);
  for (const auto& e : scene.slots)
    if (vocab.require_kind(e.name) != e.kind)
      throw ConfigError(fmt::format("element '{}' has the wrong kind", e.name));

  auto has = [&](auto pred) {
    return std::any_of(scene.slots.begin(), scene.slots.end(), pred);
  };
  auto has_kind = [&](ElementKind k) {
    return has([k](const Element& e) { return e.kind == k; });
  };
  const bool target_present = has([&](const Element& e) { return e.name == instruction.target; });
  using R = InfeasibilityReason;

  if (instruction.verb == Verb::Grasp)
    return target_present ? Classification{Category::Grasp, R::None}
                          : Classification{Category::Impossible, R::MissingTarget};

  // Furniture and water never grow, whether or not they are in the scene.
  if (target_kind == ElementKind::Furniture || target_kind == ElementKind::Water)
    return {Category::Impossible, R::GrowNonGrowable};
  if (!target_present) return {Category::Impossible, R::MissingTarget};
  if (!has_kind(ElementKind::Water)) return {Category::Impossible, R::MissingWater};
  if (target_kind == ElementKind::Plant) return {Category::GrowPlant, R::None};
  if (!has_kind(ElementKind::Plant)) return {Category::Impossible, R::MissingPlant};
  if (target_kind == ElementKind::Herbivore) return {Category::GrowHerbivore, R::None};
  if (!has_kind(ElementKind::Herbivore)) return {Category::Impossible, R::MissingHerbivore};
  return {Category::GrowCarnivore, R::None};
}

Classification classify(const Vocabulary& vocab, const Goal& goal) {
  return classify(vocab, goal.instruction, goal.scene);
}

// ---------------------------------------------------------------------------

namespace {

// Element identities are fixed per slot; only states, positions, and the
// inventory order vary. 28 bits cover the whole search state.
std::uint32_t state_key(const EnvState& s) {
  std::uint32_t key = 0;
  for (const auto& slot : s.ground)
    key = (key << 3) | (slot ? 1u + static_cast<std::uint32_t>(slot->state) : 0u);
  key = (key << 3) | (s.standing_on ? 1u + static_cast<std::uint32_t>(*s.standing_on) : 0u);
  for (int j = 0; j < kInventoryCapacity; ++j) {
    std::uint32_t item = 0;
    if (j < static_cast<int>(s.inventory.size()))
      item = 0x20u | (static_cast<std::uint32_t>(s.inventory[j].origin_slot) << 3) |
             static_cast<std::uint32_t>(s.inventory[j].element.state);
    key = (key << 6) | item;
  }
  return (key << 1) | (s.succeeded ? 1u : 0u);
}

}  // namespace

BfsResult feasible_bfs(const Goal& goal) {
  return feasible_bfs(goal, step_budget_for(goal.instruction.verb, goal.instruction.target_kind));
}

BfsResult feasible_bfs(const Goal& goal, int budget) {
  BfsResult result;
  EnvState start = reset(goal, budget);
  if (start.done) return result;

  std::unordered_set<std::uint32_t> visited{state_key(start)};
  std::deque<EnvState> frontier{std::move(start)};
  while (!frontier.empty()) {
    EnvState s = std::move(frontier.front());
    frontier.pop_front();
    ++result.states_expanded;
    for (int a = 0; a < kActionCount; ++a) {
      EnvState next = s;
      step(next, Action::from_index(a));
      if (next.succeeded) {
        result.feasible = true;
        result.depth = next.steps_taken;
        return result;
      }
      if (next.done) continue;
      if (visited.insert(state_key(next)).second) frontier.push_back(std::move(next));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------

std::uint64_t total_goal_count(std::uint64_t names, std::uint64_t verbs) {
  std::uint64_t n = verbs;
  for (int i = 0; i < 5; ++i) n *= names;
  return n;
}

std::uint64_t total_goal_count(const Vocabulary& vocab) { return total_goal_count(vocab.size()); }

void GenerationConfig::validate() const {
  if (train_goals < 0 || test_goals < 0) throw ConfigError("goal counts must be nonnegative");
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("proportions must lie in [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError(fmt::format("proportions sum to {}, expected 1", sum));
}

std::array<std::int64_t, kCategoryCount> category_quotas(
    std::int64_t total, const std::array<double, kCategoryCount>& proportions) {
  std::array<std::int64_t, kCategoryCount> q{};
  std::int64_t assigned = 0;
  for (int c = 1; c < kCategoryCount; ++c) {
    q[c] = static_cast<std::int64_t>(std::floor(proportions[c] * static_cast<double>(total) + 1e-9));
    assigned += q[c];
  }
  q[0] = total - assigned;
  return q;
}

// ---------------------------------------------------------------------------

GoalSpace::GoalSpace(Vocabulary vocab, GenerationConfig config)
    : vocab_(std::move(vocab)), config_(config) {}

std::vector<GoalId> GoalSpace::ids(Split split) const {
  std::vector<GoalId> out;
  for (std::size_t i = 0; i < goals_.size(); ++i)
    if (splits_[i] == split) out.push_back(goals_[i].id);
  return out;
}

std::vector<GoalId> GoalSpace::ids(Split split, Category category) const {
  std::vector<GoalId> out;
  for (std::size_t i = 0; i < goals_.size(); ++i)
    if (splits_[i] == split && goals_[i].category == category) out.push_back(goals_[i].id);
  return out;
}

GoalId GoalSpace::add(Instruction instruction, SceneSpec scene, Split split) {
  validate_scene(scene);
  auto cls = classify(vocab_, instruction, scene);
  Goal g;
  g.id = static_cast<GoalId>(goals_.size());
  g.instruction = std::move(instruction);
  g.scene = std::move(scene);
  g.category = cls.category;
  g.feasible = cls.feasible();
  goals_.push_back(std::move(g));
  splits_.push_back(split);
  return goals_.back().id;
}

namespace {

std::string identity_key(const Instruction& ins, const SceneSpec& scene) {
  std::string key = fmt::format("{}|{}", to_string(ins.verb), ins.target);
  for (const auto& e : scene.slots) key += "|" + e.name;
  return key;
}

}  // namespace

void GoalSpace::validate() const {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < goals_.size(); ++i) {
    const Goal& g = goals_[i];
    if (g.id != static_cast<GoalId>(i))
      throw ValidationError(fmt::format("goal {} has id {}", i, g.id));
    auto cls = classify(vocab_, g);
    if (cls.category != g.category || cls.feasible() != g.feasible)
      throw ValidationError(fmt::format("goal {} is recorded as {} but classifies as {}", g.id,
                                        to_string(g.category), to_string(cls.category)));
    if (!seen.insert(identity_key(g.instruction, g.scene)).second)
      throw ValidationError(fmt::format("goal {} duplicates an earlier goal", g.id));
  }
}

// ---------------------------------------------------------------------------

namespace {

// Exact per-category population of the distinct-name space, when small
// enough to enumerate.
std::optional<std::array<std::int64_t, kCategoryCount>> enumerate_population(
    const Vocabulary& vocab) {
  const auto& names = vocab.all_names();
  const std::size_t n = names.size();
  if (n < static_cast<std::size_t>(kSceneSlots)) return std::array<std::int64_t, kCategoryCount>{};
  const double space = 2.0 * n * n * (n - 1) * (n - 2) * (n - 3);
  if (space > 2e6) return std::nullopt;
  std::array<std::int64_t, kCategoryCount> pop{};
  SceneSpec scene;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t c = 0; c < n; ++c)
        for (std::size_t d = 0; d < n; ++d) {
          if (a == b || a == c || a == d || b == c || b == d || c == d) continue;
          const std::size_t idx[4] = {a, b, c, d};
          for (int k = 0; k < kSceneSlots; ++k)
            scene.slots[k] = make_initial_element(vocab, names[idx[k]]);
          for (Verb v : {Verb::Grasp, Verb::Grow})
            for (const auto& t : names)
              ++pop[category_index(classify(vocab, make_instruction(vocab, v, t), scene).category)];
        }
  return pop;
}

}  // namespace

GoalSpace generate(const GenerationConfig& config, const Vocabulary& vocab) {
  config.validate();
  const auto& names = vocab.all_names();
  GoalSpace space(vocab, config);
  const std::int64_t total = config.train_goals + config.test_goals;
  if (total == 0) return space;
  if (names.size() < static_cast<std::size_t>(kSceneSlots))
    throw GenerationError("vocabulary has fewer names than scene slots");

  const auto train_q = category_quotas(config.train_goals, config.proportions);
  const auto test_q = category_quotas(config.test_goals, config.proportions);
  if (auto pop = enumerate_population(vocab)) {
    for (int c = 0; c < kCategoryCount; ++c)
      if (train_q[c] + test_q[c] > (*pop)[c])
        throw GenerationError(fmt::format("{} goals requested for {} but only {} exist",
                                          train_q[c] + test_q[c],
                                          to_string(static_cast<Category>(c)), (*pop)[c]));
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick_name(0, names.size() - 1);
  std::bernoulli_distribution pick_verb(0.5);
  std::unordered_set<std::string> taken;
  const std::int64_t max_attempts = std::max<std::int64_t>(50'000'000, 2'000 * total);

  for (Split split : {Split::Train, Split::Test}) {
    auto remaining = split == Split::Train ? train_q : test_q;
    std::int64_t left = std::accumulate(remaining.begin(), remaining.end(), std::int64_t{0});
    std::int64_t attempts = 0;
    while (left > 0) {
      if (++attempts > max_attempts)
        throw GenerationError(fmt::format("could not fill {} split quotas after {} draws",
                                          to_string(split), max_attempts));
      Instruction ins = make_instruction(vocab, pick_verb(rng) ? Verb::Grow : Verb::Grasp,
                                         names[pick_name(rng)]);
      std::array<std::size_t, kSceneSlots> idx{};
      for (int k = 0; k < kSceneSlots; ++k) {
        bool dup;
        do {
          idx[k] = pick_name(rng);
          dup = std::find(idx.begin(), idx.begin() + k, idx[k]) != idx.begin() + k;
        } while (dup);
      }
      SceneSpec scene;
      for (int k = 0; k < kSceneSlots; ++k) scene.slots[k] = make_initial_element(vocab, names[idx[k]]);
      const auto cls = classify(vocab, ins, scene);
      auto& quota = remaining[category_index(cls.category)];
      if (quota == 0) continue;
      if (!taken.insert(identity_key(ins, scene)).second) continue;
      space.add(std::move(ins), std::move(scene), split);
      --quota;
      --left;
    }
  }
  return space;
}

// ---------------------------------------------------------------------------

namespace {

json vocabulary_json(const Vocabulary& vocab) {
  json j = json::object();
  for (auto kind : kAllKinds) j[std::string(to_string(kind))] = vocab.names(kind);
  return j;
}

json config_json(const GenerationConfig& c) {
  json props = json::object();
  for (auto cat : kAllCategories)
    props[std::string(to_string(cat))] = c.proportions[category_index(cat)];
  return {{"train_goals", c.train_goals},
          {"test_goals", c.test_goals},
          {"proportions", props},
          {"seed", c.seed}};
}

}  // namespace

void save(const GoalSpace& space, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  json header = {{"format_version", kGoalSpaceFormatVersion},
                 {"goal_count", space.size()},
                 {"vocabulary", vocabulary_json(space.vocabulary())},
                 {"config", config_json(space.config())}};
  out << header.dump() << '\n';
  for (const auto& g : space.goals()) {
    json scene = json::array();
    for (const auto& e : g.scene.slots)
      scene.push_back({{"name", e.name},
                       {"kind", std::string(to_string(e.kind))},
                       {"state", std::string(to_string(e.state))}});
    auto cls = classify(space.vocabulary(), g);
    json rec = {{"id", g.id},
                {"verb", std::string(to_string(g.instruction.verb))},
                {"target", g.instruction.target},
                {"scene", scene},
                {"category", std::string(to_string(g.category))},
                {"feasible", g.feasible},
                {"reason", std::string(to_string(cls.reason))},
                {"split", std::string(to_string(space.split(g.id)))}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

GoalSpace load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot read {}", path.string()));

  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> ValidationError {
    return ValidationError(fmt::format("{}:{}: {}", path.string(), line_no, what));
  };
  auto parse_line = [&]() -> json {
    try {
      return json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(fmt::format("malformed record ({})", e.what()));
    }
  };

  if (!std::getline(in, line)) throw ValidationError(fmt::format("{}: empty file", path.string()));
  ++line_no;
  json header = parse_line();
  std::optional<GoalSpace> space;
  std::size_t expected = 0;
  try {
    if (header.at("format_version").get<int>() != kGoalSpaceFormatVersion)
      throw fail(fmt::format("format_version {} is not supported",
                             header.at("format_version").dump()));
    std::map<ElementKind, std::vector<std::string>> names;
    for (auto kind : kAllKinds)
      names[kind] = header.at("vocabulary").at(std::string(to_string(kind))).get<std::vector<std::string>>();
    GenerationConfig cfg;
    const auto& jc = header.at("config");
    cfg.train_goals = jc.at("train_goals").get<std::int64_t>();
    cfg.test_goals = jc.at("test_goals").get<std::int64_t>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();
    for (auto cat : kAllCategories)
      cfg.proportions[category_index(cat)] =
          jc.at("proportions").at(std::string(to_string(cat))).get<double>();
    expected = header.at("goal_count").get<std::size_t>();
    space.emplace(Vocabulary(std::move(names)), cfg);
  } catch (const json::exception& e) {
    throw fail(fmt::format("bad header ({})", e.what()));
  } catch (const ConfigError& e) {
    throw fail(e.what());
  }

  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = parse_line();
    try {
      const auto& vocab = space->vocabulary();
      Instruction ins = make_instruction(vocab, parse_verb(rec.at("verb").get<std::string>()),
                                         rec.at("target").get<std::string>());
      const auto& js = rec.at("scene");
      if (!js.is_array() || js.size() != kSceneSlots)
        throw fail("scene must have exactly 4 slots");
      SceneSpec scene;
      for (int k = 0; k < kSceneSlots; ++k) {
        Element e{js[k].at("name").get<std::string>(),
                  parse_kind(js[k].at("kind").get<std::string>()),
                  parse_state(js[k].at("state").get<std::string>())};
        if (vocab.require_kind(e.name) != e.kind)
          throw fail(fmt::format("element '{}' recorded with the wrong kind", e.name));
        scene.slots[k] = std::move(e);
      }
      const Split split = rec.at("split").get<std::string>() == "test" ? Split::Test : Split::Train;
      const auto category = parse_category(rec.at("category").get<std::string>());
      const bool feasible = rec.at("feasible").get<bool>();
      const auto reason = parse_reason(rec.at("reason").get<std::string>());
      if (rec.at("id").get<GoalId>() != static_cast<GoalId>(space->size()))
        throw fail("goal ids must be dense and in order");
      auto cls = classify(vocab, ins, scene);
      if (cls.category != category || cls.feasible() != feasible || cls.reason != reason)
        throw fail(fmt::format("recorded ({}, feasible={}, {}) but classify gives ({}, {})",
                               to_string(category), feasible, to_string(reason),
                               to_string(cls.category), to_string(cls.reason)));
      if (!seen.insert(identity_key(ins, scene)).second)
        throw fail("duplicate goal (train and test must be disjoint)");
      space->add(std::move(ins), std::move(scene), split);
    } catch (const json::exception& e) {
      throw fail(fmt::format("malformed record ({})", e.what()));
    } catch (const ConfigError& e) {
      throw fail(e.what());
    }
  }
  if (space->size() != expected)
    throw ValidationError(fmt::format("{}: truncated, header announces {} goals but {} were read",
                                      path.string(), expected, space->size()));
  return std::move(*space);
}

}  // namespace alplab
