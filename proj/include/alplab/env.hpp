#pragma once

// Little-Zoo: a deterministic, fully observable text world where an agent
// grasps elements and grows plants and animals by releasing reagents on them.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/container/static_vector.hpp>

namespace alplab {

enum class ElementKind : std::uint8_t { Furniture, Plant, Herbivore, Carnivore, Water };
inline constexpr std::array<ElementKind, 5> kAllKinds = {
    ElementKind::Furniture, ElementKind::Plant, ElementKind::Herbivore,
    ElementKind::Carnivore, ElementKind::Water};

enum class ElementState : std::uint8_t { Plain, Seed, GrownPlant, Baby, GrownAnimal };

enum class Verb : std::uint8_t { Grasp, Grow };

// Expert buckets. Order is the canonical reporting order everywhere.
enum class Category : std::uint8_t { Impossible, Grasp, GrowPlant, GrowHerbivore, GrowCarnivore };
inline constexpr int kCategoryCount = 5;
inline constexpr std::array<Category, 5> kAllCategories = {
    Category::Impossible, Category::Grasp, Category::GrowPlant, Category::GrowHerbivore,
    Category::GrowCarnivore};
inline constexpr std::array<Category, 4> kFeasibleCategories = {
    Category::Grasp, Category::GrowPlant, Category::GrowHerbivore, Category::GrowCarnivore};

std::string_view to_string(ElementKind kind);
std::string_view to_string(ElementState state);
std::string_view to_string(Verb verb);
std::string_view to_string(Category category);
ElementKind parse_kind(std::string_view text);
ElementState parse_state(std::string_view text);
Verb parse_verb(std::string_view text);
Category parse_category(std::string_view text);

inline constexpr int category_index(Category c) { return static_cast<int>(c); }

class Vocabulary {
 public:
  // furniture {bookshelf, desk, bed, door, table, chair}, plants, herbivores,
  // carnivores with six names each, plus the singleton "water".
  static Vocabulary default_vocabulary();

  explicit Vocabulary(std::map<ElementKind, std::vector<std::string>> names_by_kind);

  const std::vector<std::string>& names(ElementKind kind) const;
  std::optional<ElementKind> kind_of(std::string_view name) const;
  // Throws ConfigError for names outside the vocabulary.
  ElementKind require_kind(std::string_view name) const;
  // Kind order, then declaration order within a kind.
  const std::vector<std::string>& all_names() const { return all_names_; }
  std::size_t size() const { return all_names_.size(); }

  bool operator==(const Vocabulary& other) const { return names_by_kind_ == other.names_by_kind_; }

 private:
  std::map<ElementKind, std::vector<std::string>> names_by_kind_;
  std::vector<std::string> all_names_;
  std::map<std::string, ElementKind, std::less<>> kind_by_name_;
};

struct Element {
  std::string name;
  ElementKind kind = ElementKind::Furniture;
  ElementState state = ElementState::Plain;

  bool operator==(const Element&) const = default;
};

ElementState initial_state(ElementKind kind);
bool state_compatible(ElementKind kind, ElementState state);
bool is_grown(const Element& e);
Element make_initial_element(const Vocabulary& vocab, std::string_view name);
// "water", "<name>", "<name> seed", "baby <name>".
std::string describe(const Element& e);

struct Instruction {
  Verb verb = Verb::Grasp;
  std::string target;  // bare element name, never "baby lion"
  ElementKind target_kind = ElementKind::Furniture;  // resolved from the vocabulary

  bool operator==(const Instruction&) const = default;
};

inline constexpr int kSceneSlots = 4;

struct SceneSpec {
  std::array<Element, kSceneSlots> slots;

  bool operator==(const SceneSpec&) const = default;
};

using GoalId = std::int32_t;

Instruction make_instruction(const Vocabulary& vocab, Verb verb, std::string_view target);

struct Goal {
  GoalId id = 0;
  Instruction instruction;
  SceneSpec scene;
  Category category = Category::Impossible;
  bool feasible = false;
};

// Throws ConfigError when a slot carries a state illegal for its kind or
// not the initial one.
void validate_scene(const SceneSpec& scene);

enum class ActionType : std::uint8_t { GoTo, Grasp, ReleaseItem, ReleaseAll };

struct Action {
  ActionType type = ActionType::GoTo;
  int arg = 0;  // scene slot for GoTo, inventory index for ReleaseItem

  // 0..3 GoTo slot, 4 Grasp, 5..6 ReleaseItem, 7 ReleaseAll.
  constexpr int index() const {
    switch (type) {
      case ActionType::GoTo: return arg;
      case ActionType::Grasp: return 4;
      case ActionType::ReleaseItem: return 5 + arg;
      case ActionType::ReleaseAll: return 7;
    }
    return -1;
  }
  static constexpr Action from_index(int i) {
    if (i < 4) return {ActionType::GoTo, i};
    if (i == 4) return {ActionType::Grasp, 0};
    if (i < 7) return {ActionType::ReleaseItem, i - 5};
    return {ActionType::ReleaseAll, 0};
  }
  bool operator==(const Action&) const = default;
};

inline constexpr int kActionCount = 8;
inline constexpr int kInventoryCapacity = 2;

struct Held {
  Element element;
  int origin_slot = 0;

  bool operator==(const Held&) const = default;
};

using Inventory = boost::container::static_vector<Held, kInventoryCapacity>;
using ActionSet = boost::container::static_vector<Action, kActionCount>;

struct EnvState {
  Instruction instruction;
  std::array<std::optional<Element>, kSceneSlots> ground;  // indexed by original slot
  std::optional<int> standing_on;
  Inventory inventory;
  int steps_taken = 0;
  int step_budget = 0;
  bool done = false;
  bool succeeded = false;

  bool operator==(const EnvState&) const = default;
};

struct Observation {
  std::string goal_text;
  std::vector<std::string> you_see;
  std::string standing_on;  // "nothing" when absent
  std::vector<std::string> inventory;
  EnvState structured;
};

struct StepResult {
  int reward = 0;
  bool done = false;
};

// (minimal, budget) per category; budget is 150% of the optimal length.
int minimal_steps(Category category);
int step_budget(Category category);
// Budget for any instruction, feasible or not: the category the instruction
// syntactically mimics. Grow on furniture/water gets the longest budget.
int step_budget_for(Verb verb, ElementKind target_kind);

EnvState reset(const Goal& goal);
// Budget override, used for degenerate configurations and tests.
EnvState reset(const Goal& goal, int budget);
StepResult step(EnvState& state, Action action);
ActionSet legal_actions(const EnvState& state);
bool interacts(const Element& reagent, const Element& recipient);

Observation observe(const EnvState& state);
std::string render_text(const Observation& obs);
// Goal and scene lines only; the text the competence estimator reads.
std::string goal_prompt(const Goal& goal);

// Next action of the scripted optimal strategy. Throws UsageError on an
// infeasible goal or a state the expert cannot continue from.
Action expert_action(const EnvState& state, const Goal& goal);

}  // namespace alplab
