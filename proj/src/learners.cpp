#include "alplab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "alplab/errors.hpp"
#include "alplab/tinynet.hpp"
#include "json_io.hpp"

namespace alplab {

using nlohmann::json;
using detail::read_json;
using detail::write_json;

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::Expert: return "expert";
    case LearnerKind::Simulated: return "simulated";
    case LearnerKind::QLinear: return "qlinear";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view text) {
  for (auto k : {LearnerKind::Expert, LearnerKind::Simulated, LearnerKind::QLinear})
    if (to_string(k) == text) return k;
  throw ConfigError(fmt::format("unknown learner '{}'", text));
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& config) {
  switch (config.kind) {
    case LearnerKind::Expert: return std::make_unique<ExpertLearner>();
    case LearnerKind::Simulated: return std::make_unique<SimulatedLearner>(config.schedule);
    case LearnerKind::QLinear: return std::make_unique<FeatureQLearner>(config.q);
  }
  throw ConfigError("unknown learner kind");
}

// ---------------------------------------------------------------------------

PolicyLearner::Trajectory PolicyLearner::rollout(const Goal& goal, Rng& rng, bool greedy) const {
  Trajectory t;
  EnvState s = reset(goal);
  while (!s.done) {
    const Action a = act(s, goal, rng, greedy);
    Step st{s, a, 0};
    st.reward = step(s, a).reward;
    t.steps.push_back(std::move(st));
  }
  t.succeeded = s.succeeded;
  t.final_state = std::move(s);
  return t;
}

int PolicyLearner::train_episode(const Goal& goal, Rng& rng) {
  const Trajectory t = rollout(goal, rng, false);
  learn(goal, t);
  return t.succeeded ? 1 : 0;
}

int PolicyLearner::eval_episode(const Goal& goal, Rng& rng) const {
  return rollout(goal, rng, true).succeeded ? 1 : 0;
}

// ---------------------------------------------------------------------------

Action ExpertLearner::act(const EnvState& state, const Goal& goal, Rng&, bool) const {
  if (goal.feasible && !state.succeeded) return expert_action(state, goal);
  const auto legal = legal_actions(state);
  return legal.empty() ? Action::from_index(0) : legal.front();
}

void ExpertLearner::save_checkpoint(const std::filesystem::path& dir) const {
  write_json(dir / "learner.json", {{"kind", "expert"}, {"version", version_}});
}

void ExpertLearner::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "learner.json");
  if (j.at("kind") != "expert") throw ValidationError("checkpoint is not an expert learner");
  version_ = j.at("version").get<std::uint64_t>();
}

// ---------------------------------------------------------------------------

void ScheduleConfig::validate() const {
  for (const auto& r : ramps) {
    if (r.rate < 0.0) throw ConfigError("ramp rates must be nonnegative");
    if (r.asymptote < 0.0 || r.asymptote > 1.0) throw ConfigError("ramp asymptotes must lie in [0, 1]");
  }
  if (gate_threshold < 0.0 || gate_threshold > 1.0) throw ConfigError("gate_threshold must lie in [0, 1]");
}

CompetenceSchedule::CompetenceSchedule(ScheduleConfig config) : config_(config) {
  config_.validate();
  const double inf = std::numeric_limits<double>::infinity();
  start_[0] = inf;
  double prev_cross = 0.0;
  for (int c = 1; c < kCategoryCount; ++c) {
    const Ramp& r = config_.ramps[c];
    start_[c] = (config_.gated && c > 1) ? std::max(r.start, prev_cross) : r.start;
    const double th = config_.gate_threshold;
    if (th <= 0.0)
      prev_cross = start_[c];
    else if (th < r.asymptote && r.rate > 0.0)
      prev_cross = start_[c] + 2.0 * std::atanh(th / r.asymptote) / r.rate;
    else
      prev_cross = inf;
  }
}

double CompetenceSchedule::effective_start(Category category) const {
  return start_[category_index(category)];
}

double CompetenceSchedule::probability(Category category, double episode) const {
  const int c = category_index(category);
  if (c == 0 || episode < start_[c]) return 0.0;
  const Ramp& r = config_.ramps[c];
  return r.asymptote * std::tanh(r.rate * (episode - start_[c]) / 2.0);
}

SimulatedLearner::SimulatedLearner(ScheduleConfig config) : schedule_(config) {}

double SimulatedLearner::true_competence(Category category) const {
  return schedule_.probability(category, static_cast<double>(episodes_));
}

int SimulatedLearner::train_episode(const Goal& goal, Rng& rng) {
  const int outcome = eval_episode(goal, rng);
  ++episodes_;
  return outcome;
}

int SimulatedLearner::eval_episode(const Goal& goal, Rng& rng) const {
  const double p = true_competence(goal.category);
  return uniform01(rng) < p ? 1 : 0;
}

void SimulatedLearner::save_checkpoint(const std::filesystem::path& dir) const {
  write_json(dir / "learner.json", {{"kind", "simulated"}, {"episodes", episodes_}});
}

void SimulatedLearner::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "learner.json");
  if (j.at("kind") != "simulated") throw ValidationError("checkpoint is not a simulated learner");
  episodes_ = j.at("episodes").get<std::int64_t>();
}

// ---------------------------------------------------------------------------

void QConfig::validate() const {
  if (learning_rate < 0.0) throw ConfigError("q learning_rate must be nonnegative");
  if (discount < 0.0 || discount > 1.0) throw ConfigError("q discount must lie in [0, 1]");
  if (n_step < 1) throw ConfigError("q n_step must be at least 1");
  if (exploration < 0.0 || exploration > 1.0) throw ConfigError("q exploration must lie in [0, 1]");
  if (hash_bits < 8 || hash_bits > 24) throw ConfigError("q hash_bits must lie in [8, 24]");
}

FeatureQLearner::FeatureQLearner(QConfig config) : config_(config) {
  config_.validate();
  weights_.assign(std::size_t{1} << config_.hash_bits, 0.0);
}

namespace {

constexpr std::uint8_t kNone = 0xff;

class Hasher {
 public:
  explicit Hasher(std::uint8_t tag) { add(tag); }
  Hasher& add(std::uint8_t b) {
    h_ ^= b;
    h_ *= 16777619u;
    return *this;
  }
  Hasher& add(std::string_view s) {
    for (unsigned char c : s) add(static_cast<std::uint8_t>(c));
    return add(std::uint8_t{0});
  }
  std::uint32_t value() const { return h_; }

 private:
  std::uint32_t h_ = 2166136261u;
};

// Element kind and state, whether it is the goal target, whether it could be
// released onto something still on the ground, and whether a held item can be
// released onto it.
std::uint8_t describe_byte(const Element& e, const EnvState& s) {
  bool reagent = false, recipient = false;
  for (const auto& g : s.ground)
    if (g && interacts(e, *g)) reagent = true;
  for (const auto& h : s.inventory)
    if (interacts(h.element, e)) recipient = true;
  const int base = static_cast<int>(e.kind) * 5 + static_cast<int>(e.state);
  return static_cast<std::uint8_t>(base * 8 + (e.name == s.instruction.target ? 4 : 0) +
                                   (reagent ? 2 : 0) + (recipient ? 1 : 0));
}

std::uint8_t describe_byte(const std::optional<Element>& e, const EnvState& s) {
  return e ? describe_byte(*e, s) : kNone;
}

// Only the target/reagent/recipient flags of a descriptor.
std::uint8_t roles(std::uint8_t desc) { return desc == kNone ? kNone : desc & 7; }

}  // namespace

FeatureQLearner::Features FeatureQLearner::features(const EnvState& s, Action a) const {
  const Instruction& ins = s.instruction;
  std::optional<Element> standing;
  if (s.standing_on) standing = s.ground[*s.standing_on];
  const std::uint8_t stand = describe_byte(standing, s);

  std::uint8_t a0 = static_cast<std::uint8_t>(a.type), a1 = kNone, a2 = kNone;
  std::string_view acted_name;
  switch (a.type) {
    case ActionType::GoTo:
      a1 = describe_byte(s.ground[a.arg], s);
      if (s.ground[a.arg]) acted_name = s.ground[a.arg]->name;
      break;
    case ActionType::Grasp:
      a1 = stand;
      if (standing) acted_name = standing->name;
      break;
    case ActionType::ReleaseItem:
      if (a.arg < static_cast<int>(s.inventory.size())) {
        a1 = describe_byte(s.inventory[a.arg].element, s);
        acted_name = s.inventory[a.arg].element.name;
      }
      a2 = stand;
      break;
    case ActionType::ReleaseAll: a1 = stand; break;
  }

  std::array<std::uint8_t, kInventoryCapacity> inv{kNone, kNone};
  for (std::size_t j = 0; j < s.inventory.size(); ++j) inv[j] = describe_byte(s.inventory[j].element, s);
  std::sort(inv.begin(), inv.end());

  const auto verb = static_cast<std::uint8_t>(ins.verb);
  const auto tkind = static_cast<std::uint8_t>(ins.target_kind);
  const std::uint32_t mask = (std::uint32_t{1} << config_.hash_bits) - 1;

  Features f;
  f[0] = Hasher(1).add(a0).add(a1).add(a2).value();
  f[1] = Hasher(2).add(verb).add(tkind).add(a0).add(a1).add(a2).value();
  f[2] = Hasher(3).add(verb).add(tkind).add(a0).add(a1).add(a2).add(stand).value();
  f[3] = Hasher(4).add(verb).add(tkind).add(a0).add(a1).add(a2).add(stand).add(inv[0]).add(inv[1]).value();
  f[4] = Hasher(5).add(verb).add(ins.target).add(a0).add(acted_name).value();
  f[5] = Hasher(6).add(verb).add(a0).add(roles(a1)).add(roles(a2)).value();
  for (auto& v : f) v &= mask;
  return f;
}

double FeatureQLearner::q_value(const EnvState& state, Action action) const {
  double q = 0.0;
  for (auto i : features(state, action)) q += weights_[i];
  return q;
}

Action FeatureQLearner::greedy_action(const EnvState& state) const {
  const auto legal = legal_actions(state);
  if (legal.empty()) return Action::from_index(0);
  Action best = legal.front();
  double best_q = q_value(state, best);
  for (std::size_t i = 1; i < legal.size(); ++i) {
    const double q = q_value(state, legal[i]);
    if (q > best_q || (q == best_q && legal[i].index() < best.index())) {
      best = legal[i];
      best_q = q;
    }
  }
  return best;
}

double FeatureQLearner::max_q(const EnvState& state) const {
  const auto legal = legal_actions(state);
  if (legal.empty()) return 0.0;
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& a : legal) m = std::max(m, q_value(state, a));
  return m;
}

Action FeatureQLearner::act(const EnvState& state, const Goal&, Rng& rng, bool greedy) const {
  if (!greedy && config_.exploration > 0.0 && uniform01(rng) < config_.exploration) {
    const auto legal = legal_actions(state);
    if (!legal.empty()) return legal[uniform_index(rng, legal.size())];
  }
  return greedy_action(state);
}

void FeatureQLearner::learn(const Goal&, const Trajectory& traj) {
  const auto T = static_cast<int>(traj.steps.size());
  const int n = config_.n_step;
  const double g = config_.discount;
  const double alpha = config_.learning_rate / kFeaturesPerAction;
  for (int t = T - 1; t >= 0; --t) {
    double ret = 0.0, disc = 1.0;
    for (int i = 0; i < n && t + i < T; ++i) {
      ret += disc * traj.steps[t + i].reward;
      disc *= g;
    }
    // Episodes end on success or on the step budget; both are terminal.
    if (t + n < T) ret += disc * max_q(traj.steps[t + n].state);
    const auto& st = traj.steps[t];
    const auto f = features(st.state, st.action);
    double q = 0.0;
    for (auto i : f) q += weights_[i];
    const double delta = ret - q;
    if (delta == 0.0) continue;
    for (auto i : f) weights_[i] += alpha * delta;
  }
  ++version_;
}

void FeatureQLearner::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  ParamStore p;
  p.add_segment("q.weights", 1, weights_.size());
  std::copy(weights_.begin(), weights_.end(), p.values().begin());
  p.set_version(version_);
  write_snapshot(dir / "qweights.snap", snapshot(p));
  write_json(dir / "learner.json",
             {{"kind", "qlinear"},
              {"version", version_},
              {"config",
               {{"learning_rate", config_.learning_rate},
                {"discount", config_.discount},
                {"n_step", config_.n_step},
                {"exploration", config_.exploration},
                {"hash_bits", config_.hash_bits}}}});
}

void FeatureQLearner::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "learner.json");
  if (j.at("kind") != "qlinear") throw ValidationError("checkpoint is not a qlinear learner");
  const ParamStore p = restore(read_snapshot(dir / "qweights.snap"));
  const auto w = p.segment("q.weights");
  if (w.size() != weights_.size()) throw ValidationError("q weight table size differs");
  weights_.assign(w.begin(), w.end());
  version_ = j.at("version").get<std::uint64_t>();
}

}  // namespace alplab
