#include "alplab/env.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include <fmt/format.h>

#include "alplab/errors.hpp"

namespace alplab {

std::string_view to_string(ElementKind kind) {
  switch (kind) {
    case ElementKind::Furniture: return "furniture";
    case ElementKind::Plant: return "plant";
    case ElementKind::Herbivore: return "herbivore";
    case ElementKind::Carnivore: return "carnivore";
    case ElementKind::Water: return "water";
  }
  return "?";
}

std::string_view to_string(ElementState state) {
  switch (state) {
    case ElementState::Plain: return "plain";
    case ElementState::Seed: return "seed";
    case ElementState::GrownPlant: return "grown_plant";
    case ElementState::Baby: return "baby";
    case ElementState::GrownAnimal: return "grown_animal";
  }
  return "?";
}

std::string_view to_string(Verb verb) { return verb == Verb::Grasp ? "Grasp" : "Grow"; }

std::string_view to_string(Category category) {
  switch (category) {
    case Category::Impossible: return "impossible";
    case Category::Grasp: return "grasp";
    case Category::GrowPlant: return "grow_plant";
    case Category::GrowHerbivore: return "grow_herbivore";
    case Category::GrowCarnivore: return "grow_carnivore";
  }
  return "?";
}

ElementKind parse_kind(std::string_view text) {
  for (auto k : kAllKinds)
    if (to_string(k) == text) return k;
  throw ConfigError(fmt::format("unknown element kind '{}'", text));
}

ElementState parse_state(std::string_view text) {
  for (auto s : {ElementState::Plain, ElementState::Seed, ElementState::GrownPlant,
                 ElementState::Baby, ElementState::GrownAnimal})
    if (to_string(s) == text) return s;
  throw ConfigError(fmt::format("unknown element state '{}'", text));
}

Verb parse_verb(std::string_view text) {
  if (text == "Grasp") return Verb::Grasp;
  if (text == "Grow") return Verb::Grow;
  throw ConfigError(fmt::format("unknown verb '{}'", text));
}

Category parse_category(std::string_view text) {
  for (auto c : kAllCategories)
    if (to_string(c) == text) return c;
  throw ConfigError(fmt::format("unknown category '{}'", text));
}

// ---------------------------------------------------------------------------

Vocabulary Vocabulary::default_vocabulary() {
  return Vocabulary({
      {ElementKind::Furniture, {"bookshelf", "desk", "bed", "door", "table", "chair"}},
      {ElementKind::Plant, {"tomato", "carrot", "cucumber", "berry", "pea", "potato"}},
      {ElementKind::Herbivore, {"cow", "deer", "elephant", "giraffe", "rabbit", "sheep"}},
      {ElementKind::Carnivore, {"lion", "coyote", "wolf", "bobcat", "grizzly", "fox"}},
      {ElementKind::Water, {"water"}},
  });
}

Vocabulary::Vocabulary(std::map<ElementKind, std::vector<std::string>> names_by_kind)
    : names_by_kind_(std::move(names_by_kind)) {
  for (auto kind : kAllKinds) names_by_kind_[kind];  // every kind has an entry
  const auto& water = names_by_kind_[ElementKind::Water];
  if (!(water.empty() || (water.size() == 1 && water[0] == "water")))
    throw ConfigError("water must be the singleton name \"water\"");
  for (auto kind : kAllKinds) {
    for (const auto& name : names_by_kind_[kind]) {
      if (name.empty() ||
          !std::all_of(name.begin(), name.end(), [](unsigned char c) { return std::islower(c); }))
        throw ConfigError(fmt::format("element name '{}' must be a lowercase word", name));
      if (kind != ElementKind::Water && (name == "water" || name == "seed" || name == "baby"))
        throw ConfigError(fmt::format("element name '{}' is reserved", name));
      if (!kind_by_name_.emplace(name, kind).second)
        throw ConfigError(fmt::format("element name '{}' appears twice", name));
      all_names_.push_back(name);
    }
  }
}

const std::vector<std::string>& Vocabulary::names(ElementKind kind) const {
  return names_by_kind_.at(kind);
}

std::optional<ElementKind> Vocabulary::kind_of(std::string_view name) const {
  auto it = kind_by_name_.find(name);
  if (it == kind_by_name_.end()) return std::nullopt;
  return it->second;
}

ElementKind Vocabulary::require_kind(std::string_view name) const {
  if (auto k = kind_of(name)) return *k;
  throw ConfigError(fmt::format("unknown element name '{}'", name));
}

// ---------------------------------------------------------------------------

ElementState initial_state(ElementKind kind) {
  switch (kind) {
    case ElementKind::Plant: return ElementState::Seed;
    case ElementKind::Herbivore:
    case ElementKind::Carnivore: return ElementState::Baby;
    default: return ElementState::Plain;
  }
}

bool state_compatible(ElementKind kind, ElementState state) {
  switch (kind) {
    case ElementKind::Furniture:
    case ElementKind::Water: return state == ElementState::Plain;
    case ElementKind::Plant: return state == ElementState::Seed || state == ElementState::GrownPlant;
    case ElementKind::Herbivore:
    case ElementKind::Carnivore:
      return state == ElementState::Baby || state == ElementState::GrownAnimal;
  }
  return false;
}

bool is_grown(const Element& e) {
  return e.state == ElementState::GrownPlant || e.state == ElementState::GrownAnimal;
}

Element make_initial_element(const Vocabulary& vocab, std::string_view name) {
  auto kind = vocab.require_kind(name);
  return Element{std::string(name), kind, initial_state(kind)};
}

std::string describe(const Element& e) {
  switch (e.state) {
    case ElementState::Seed: return e.name + " seed";
    case ElementState::Baby: return "baby " + e.name;
    default: return e.name;
  }
}

Instruction make_instruction(const Vocabulary& vocab, Verb verb, std::string_view target) {
  return Instruction{verb, std::string(target), vocab.require_kind(target)};
}

void validate_scene(const SceneSpec& scene) {
  for (const auto& e : scene.slots) {
    if (e.name.empty()) throw ConfigError("scene slot without an element");
    if (e.state != initial_state(e.kind))
      throw ConfigError(fmt::format("scene element '{}' must start as {}", e.name,
                                    to_string(initial_state(e.kind))));
  }
}

// ---------------------------------------------------------------------------

int minimal_steps(Category category) {
  switch (category) {
    case Category::Grasp: return 2;
    case Category::GrowPlant: return 4;
    case Category::GrowHerbivore: return 7;
    case Category::GrowCarnivore: return 10;
    case Category::Impossible: break;
  }
  throw UsageError("impossible goals have no minimal trajectory");
}

int step_budget(Category category) {
  switch (category) {
    case Category::Grasp: return 3;
    case Category::GrowPlant: return 6;
    case Category::GrowHerbivore: return 11;
    case Category::GrowCarnivore: return 15;
    case Category::Impossible: break;
  }
  throw UsageError("impossible goals take their budget from the instruction");
}

int step_budget_for(Verb verb, ElementKind target_kind) {
  if (verb == Verb::Grasp) return step_budget(Category::Grasp);
  switch (target_kind) {
    case ElementKind::Plant: return step_budget(Category::GrowPlant);
    case ElementKind::Herbivore: return step_budget(Category::GrowHerbivore);
    default: return step_budget(Category::GrowCarnivore);
  }
}

EnvState reset(const Goal& goal) {
  return reset(goal, step_budget_for(goal.instruction.verb, goal.instruction.target_kind));
}

EnvState reset(const Goal& goal, int budget) {
  validate_scene(goal.scene);
  if (budget < 0) throw ConfigError("negative step budget");
  EnvState s;
  s.instruction = goal.instruction;
  for (int k = 0; k < kSceneSlots; ++k) s.ground[k] = goal.scene.slots[k];
  s.step_budget = budget;
  s.done = budget == 0;
  return s;
}

bool interacts(const Element& reagent, const Element& recipient) {
  if (reagent.kind == ElementKind::Water)
    return recipient.kind == ElementKind::Plant && recipient.state == ElementState::Seed;
  if (reagent.kind == ElementKind::Plant && reagent.state == ElementState::GrownPlant)
    return recipient.kind == ElementKind::Herbivore && recipient.state == ElementState::Baby;
  if (reagent.kind == ElementKind::Herbivore && reagent.state == ElementState::GrownAnimal)
    return recipient.kind == ElementKind::Carnivore && recipient.state == ElementState::Baby;
  return false;
}

namespace {

const Element* stood_element(const EnvState& s) {
  if (!s.standing_on) return nullptr;
  const auto& slot = s.ground[*s.standing_on];
  return slot ? &*slot : nullptr;
}

void grow(Element& e) {
  e.state = e.kind == ElementKind::Plant ? ElementState::GrownPlant : ElementState::GrownAnimal;
}

}  // namespace

ActionSet legal_actions(const EnvState& s) {
  ActionSet out;
  for (int k = 0; k < kSceneSlots; ++k)
    if (s.ground[k]) out.push_back({ActionType::GoTo, k});
  const Element* stood = stood_element(s);
  if (stood && s.inventory.size() < kInventoryCapacity) out.push_back({ActionType::Grasp, 0});
  bool any = false;
  if (stood) {
    for (int j = 0; j < static_cast<int>(s.inventory.size()); ++j) {
      if (interacts(s.inventory[j].element, *stood)) {
        out.push_back({ActionType::ReleaseItem, j});
        any = true;
      }
    }
  }
  if (any) out.push_back({ActionType::ReleaseAll, 0});
  return out;
}

StepResult step(EnvState& s, Action a) {
  if (s.done) throw UsageError("step() on a finished episode");
  bool achieved = false;
  const auto& goal = s.instruction;

  switch (a.type) {
    case ActionType::GoTo:
      if (a.arg >= 0 && a.arg < kSceneSlots && s.ground[a.arg]) s.standing_on = a.arg;
      break;
    case ActionType::Grasp:
      if (stood_element(s) && s.inventory.size() < kInventoryCapacity) {
        int slot = *s.standing_on;
        s.inventory.push_back(Held{std::move(*s.ground[slot]), slot});
        s.ground[slot].reset();
        s.standing_on.reset();
        if (goal.verb == Verb::Grasp && s.inventory.back().element.name == goal.target)
          achieved = true;
      }
      break;
    case ActionType::ReleaseItem: {
      Element* stood = s.standing_on && s.ground[*s.standing_on] ? &*s.ground[*s.standing_on]
                                                                  : nullptr;
      int j = a.arg;
      if (stood && j >= 0 && j < static_cast<int>(s.inventory.size()) &&
          interacts(s.inventory[j].element, *stood)) {
        grow(*stood);
        s.inventory.erase(s.inventory.begin() + j);
        if (goal.verb == Verb::Grow && stood->name == goal.target) achieved = true;
      }
      break;
    }
    case ActionType::ReleaseAll: {
      Element* stood = s.standing_on && s.ground[*s.standing_on] ? &*s.ground[*s.standing_on]
                                                                  : nullptr;
      if (!stood) break;
      Inventory kept;
      for (auto& held : s.inventory) {
        if (interacts(held.element, *stood)) {
          grow(*stood);
          if (goal.verb == Verb::Grow && stood->name == goal.target) achieved = true;
        } else {
          kept.push_back(std::move(held));
        }
      }
      s.inventory = std::move(kept);
      break;
    }
  }

  ++s.steps_taken;
  StepResult r;
  if (achieved && !s.succeeded) {
    s.succeeded = true;
    r.reward = 1;
  }
  s.done = s.succeeded || s.steps_taken >= s.step_budget;
  r.done = s.done;
  return r;
}

// ---------------------------------------------------------------------------

Observation observe(const EnvState& s) {
  Observation o;
  o.goal_text = fmt::format("{} {}", to_string(s.instruction.verb), s.instruction.target);
  for (const auto& slot : s.ground)
    if (slot) o.you_see.push_back(describe(*slot));
  const Element* stood = stood_element(s);
  o.standing_on = stood ? describe(*stood) : "nothing";
  for (const auto& held : s.inventory) o.inventory.push_back(describe(held.element));
  o.structured = s;
  return o;
}

std::string render_text(const Observation& o) {
  return fmt::format(
      "Goal: {}\nYou see: {}\nYou are standing on: {}\nInventory ({}/{}): {}\nAction: ",
      o.goal_text, o.you_see.empty() ? "nothing" : fmt::format("{}", fmt::join(o.you_see, ", ")),
      o.standing_on, o.inventory.size(), kInventoryCapacity,
      o.inventory.empty() ? "empty" : fmt::format("{}", fmt::join(o.inventory, ", ")));
}

std::string goal_prompt(const Goal& goal) {
  std::vector<std::string> seen;
  for (const auto& e : goal.scene.slots) seen.push_back(describe(e));
  return fmt::format("Goal: {} {}\nYou see: {}", to_string(goal.instruction.verb),
                     goal.instruction.target, fmt::join(seen, ", "));
}

// ---------------------------------------------------------------------------

namespace {

struct Located {
  enum class Where { Ground, Inventory, Gone } where = Where::Gone;
  const Element* element = nullptr;
  int inventory_index = -1;
};

Located locate(const EnvState& s, int origin_slot) {
  if (s.ground[origin_slot]) return {Located::Where::Ground, &*s.ground[origin_slot], -1};
  for (int j = 0; j < static_cast<int>(s.inventory.size()); ++j)
    if (s.inventory[j].origin_slot == origin_slot)
      return {Located::Where::Inventory, &s.inventory[j].element, j};
  return {};
}

int first_slot(const SceneSpec& scene, auto pred) {
  for (int k = 0; k < kSceneSlots; ++k)
    if (pred(scene.slots[k])) return k;
  return -1;
}

}  // namespace

Action expert_action(const EnvState& s, const Goal& goal) {
  if (!goal.feasible || goal.category == Category::Impossible)
    throw UsageError("expert_action on an infeasible goal");
  if (s.done) throw UsageError("expert_action on a finished episode");
  const auto& target = goal.instruction.target;
  const auto& scene = goal.scene;

  int target_slot = first_slot(scene, [&](const Element& e) { return e.name == target; });
  if (target_slot < 0) throw UsageError("expert_action: target absent from scene");

  auto go_or_do = [&](int slot, Action act) -> Action {
    if (s.standing_on == slot) return act;
    return {ActionType::GoTo, slot};
  };

  if (goal.instruction.verb == Verb::Grasp) {
    if (locate(s, target_slot).where != Located::Where::Ground)
      throw UsageError("expert_action: target already grasped");
    return go_or_do(target_slot, {ActionType::Grasp, 0});
  }

  std::vector<int> chain;
  chain.push_back(first_slot(scene, [](const Element& e) { return e.kind == ElementKind::Water; }));
  if (goal.category == Category::GrowHerbivore || goal.category == Category::GrowCarnivore)
    chain.push_back(first_slot(scene, [](const Element& e) { return e.kind == ElementKind::Plant; }));
  if (goal.category == Category::GrowCarnivore)
    chain.push_back(
        first_slot(scene, [](const Element& e) { return e.kind == ElementKind::Herbivore; }));
  chain.push_back(target_slot);
  if (std::find(chain.begin(), chain.end(), -1) != chain.end())
    throw UsageError("expert_action: scene lacks a prerequisite");

  for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
    Located recipient = locate(s, chain[i + 1]);
    if (recipient.where == Located::Where::Gone || is_grown(*recipient.element)) continue;
    if (recipient.where != Located::Where::Ground)
      throw UsageError("expert_action: recipient was picked up before growing");
    Located reagent = locate(s, chain[i]);
    switch (reagent.where) {
      case Located::Where::Inventory:
        return go_or_do(chain[i + 1], {ActionType::ReleaseItem, reagent.inventory_index});
      case Located::Where::Ground:
        return go_or_do(chain[i], {ActionType::Grasp, 0});
      case Located::Where::Gone:
        throw UsageError("expert_action: reagent consumed out of order");
    }
  }
  throw UsageError("expert_action: goal already achieved");
}

}  // namespace alplab
