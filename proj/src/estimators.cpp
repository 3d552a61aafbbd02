#include "alplab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "alplab/errors.hpp"
#include "json_io.hpp"

namespace alplab {

using nlohmann::json;
using detail::read_json;
using detail::rng_state;
using detail::set_rng_state;
using detail::write_json;

namespace {

void require_binary(int outcome) {
  if (outcome != 0 && outcome != 1)
    throw ValidationError(fmt::format("outcome {} is not binary", outcome));
}

void check_kind(const json& j, EstimatorKind kind, const std::filesystem::path& dir) {
  if (j.at("kind").get<std::string>() != to_string(kind))
    throw ValidationError(fmt::format("{}: checkpoint holds a '{}' estimator, expected '{}'",
                                      dir.string(), j.at("kind").get<std::string>(),
                                      to_string(kind)));
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::MB: return "mb";
    case EstimatorKind::Online: return "online";
    case EstimatorKind::Eval: return "eval";
    case EstimatorKind::EkOnline: return "ek-online";
    case EstimatorKind::EkEval: return "ek-eval";
    case EstimatorKind::Magellan: return "magellan";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(std::string_view text) {
  for (auto k : {EstimatorKind::MB, EstimatorKind::Online, EstimatorKind::Eval,
                 EstimatorKind::EkOnline, EstimatorKind::EkEval, EstimatorKind::Magellan})
    if (to_string(k) == text) return k;
  throw ConfigError(fmt::format("unknown estimator '{}'", text));
}

// ---------------------------------------------------------------------------

std::shared_ptr<const GoalCatalog> GoalCatalog::build(const GoalSpace& space) {
  auto cat = std::make_shared<GoalCatalog>();
  std::vector<std::string> prompts;
  prompts.reserve(space.size());
  for (const auto& g : space.goals()) prompts.push_back(goal_prompt(g));
  std::vector<std::string> train;
  for (GoalId id : space.ids(Split::Train)) train.push_back(prompts[static_cast<std::size_t>(id)]);
  cat->tokenizer_ = Tokenizer::build(train);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    cat->tokens_.push(cat->tokenizer_.encode(prompts[i]));
    cat->buckets_.push_back(space.goals()[i].category);
  }
  return cat;
}

// ---------------------------------------------------------------------------

void AlpEstimator::competence_many(std::span<const GoalId> goals, std::span<double> out) const {
  for (std::size_t i = 0; i < goals.size(); ++i) out[i] = competence(goals[i]);
}

void AlpEstimator::alp_many(std::span<const GoalId> goals, std::span<double> out) const {
  for (std::size_t i = 0; i < goals.size(); ++i) out[i] = alp(goals[i]);
}

std::optional<EvaluationRequest> AlpEstimator::needs_evaluation(std::int64_t) {
  return std::nullopt;
}

void AlpEstimator::ingest_evaluation(const EvaluationRequest&, std::span<const int>) {
  throw UsageError(fmt::format("the {} estimator does not take evaluations", to_string(kind())));
}

void AlpEstimator::set_pool(std::span<const GoalId>) {}

// ---------------------------------------------------------------------------

void OutcomeBuffer::push(int outcome) {
  require_binary(outcome);
  items_.push_back(static_cast<std::uint8_t>(outcome));
  if (items_.size() > capacity_) items_.pop_front();
}

double OutcomeBuffer::mean() const {
  if (items_.empty()) return 0.0;
  return std::accumulate(items_.begin(), items_.end(), 0.0) / static_cast<double>(items_.size());
}

double OutcomeBuffer::recent_mean() const {
  if (items_.empty()) return 0.0;
  const std::size_t n = items_.size(), old = n / 2;
  return std::accumulate(items_.begin() + static_cast<std::ptrdiff_t>(old), items_.end(), 0.0) /
         static_cast<double>(n - old);
}

double OutcomeBuffer::alp() const {
  const std::size_t n = items_.size();
  if (n < 2) return 0.0;
  const std::size_t old = n / 2;
  const auto mid = items_.begin() + static_cast<std::ptrdiff_t>(old);
  const double past = std::accumulate(items_.begin(), mid, 0.0) / static_cast<double>(old);
  const double now = std::accumulate(mid, items_.end(), 0.0) / static_cast<double>(n - old);
  return std::abs(now - past);
}

// ---------------------------------------------------------------------------

void EstimatorConfig::validate() const {
  if (mb_history < 1) throw ConfigError("mb_history must be at least 1");
  if (mb_alpha < 0.0 || mb_alpha > 1.0) throw ConfigError("mb_alpha must lie in [0, 1]");
  if (online_buffer < 2) throw ConfigError("online_buffer must be at least 2");
  if (eval_frequency < 1) throw ConfigError("eval_frequency must be positive");
  if (eval_per_goal < 1 || eval_per_bucket < 1)
    throw ConfigError("evaluation counts must be positive");
  if (magellan_data_capacity < 1 || magellan_snapshot_capacity < 1)
    throw ConfigError("magellan buffer capacities must be positive");
  if (magellan_update_period < 1) throw ConfigError("magellan_update_period must be positive");
  if (magellan_batch_size < 1) throw ConfigError("magellan_batch_size must be positive");
  if (magellan_steps_per_update < 0) throw ConfigError("magellan_steps_per_update must be >= 0");
  if (!(magellan_learning_rate >= 0.0)) throw ConfigError("magellan_learning_rate must be >= 0");
  if (magellan_embed_dim < 1 || magellan_hidden < 1)
    throw ConfigError("magellan network sizes must be positive");
}

std::unique_ptr<AlpEstimator> make_estimator(const EstimatorConfig& config,
                                             std::shared_ptr<const GoalCatalog> catalog,
                                             std::span<const GoalId> pool) {
  config.validate();
  switch (config.kind) {
    case EstimatorKind::MB:
      return std::make_unique<MbEstimator>(catalog->size(), config.mb_history, config.mb_alpha);
    case EstimatorKind::Online:
    case EstimatorKind::EkOnline:
      return std::make_unique<OnlineEstimator>(catalog, config.online_buffer,
                                               config.kind == EstimatorKind::EkOnline);
    case EstimatorKind::Eval:
      return std::make_unique<EvalEstimator>(catalog, pool, false, config.eval_frequency,
                                             config.eval_per_goal, config.seed);
    case EstimatorKind::EkEval:
      return std::make_unique<EvalEstimator>(catalog, pool, true, config.eval_frequency,
                                             config.eval_per_bucket, config.seed);
    case EstimatorKind::Magellan:
      return std::make_unique<MagellanEstimator>(catalog, config);
  }
  throw ConfigError("unknown estimator kind");
}

// ---------------------------------------------------------------------------
// Model-Babbling moving average

MbEstimator::MbEstimator(std::size_t goals, std::size_t history, double alpha)
    : history_cap_(history), alpha_(alpha), entries_(goals) {}

std::unique_ptr<AlpEstimator> MbEstimator::clone() const {
  return std::make_unique<MbEstimator>(*this);
}

double MbEstimator::update_utility(double utility, std::span<const std::uint8_t> history,
                                   int outcome, double alpha) {
  double lp = 0.0;
  if (!history.empty()) {
    for (auto past : history) lp += std::abs(outcome - static_cast<int>(past));
    lp /= static_cast<double>(history.size());
  }
  return alpha * utility + (1.0 - alpha) * lp;
}

void MbEstimator::observe(GoalId goal, int outcome, std::int64_t) {
  require_binary(outcome);
  auto& e = entries_.at(static_cast<std::size_t>(goal));
  std::vector<std::uint8_t> hist(e.history.begin(), e.history.end());
  e.utility = update_utility(e.utility, hist, outcome, alpha_);
  e.history.push_back(static_cast<std::uint8_t>(outcome));
  if (e.history.size() > history_cap_) e.history.pop_front();
}

double MbEstimator::competence(GoalId goal) const {
  const auto& h = entries_.at(static_cast<std::size_t>(goal)).history;
  if (h.empty()) return 0.0;
  return std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
}

double MbEstimator::alp(GoalId goal) const {
  return entries_.at(static_cast<std::size_t>(goal)).utility;
}

void MbEstimator::save_checkpoint(const std::filesystem::path& dir) const {
  json goals = json::array();
  for (const auto& e : entries_)
    goals.push_back({{"history", std::vector<int>(e.history.begin(), e.history.end())},
                     {"utility", e.utility}});
  write_json(dir / "state.json", {{"kind", to_string(kind())}, {"goals", goals}});
}

void MbEstimator::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "state.json");
  check_kind(j, kind(), dir);
  const auto& goals = j.at("goals");
  if (goals.size() != entries_.size()) throw ValidationError("checkpoint goal count differs");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto h = goals[i].at("history").get<std::vector<int>>();
    entries_[i].history.assign(h.begin(), h.end());
    entries_[i].utility = goals[i].at("utility").get<double>();
  }
}

// ---------------------------------------------------------------------------
// Online-ALP

OnlineEstimator::OnlineEstimator(std::shared_ptr<const GoalCatalog> catalog, std::size_t capacity,
                                 bool by_bucket)
    : catalog_(std::move(catalog)), by_bucket_(by_bucket) {
  const std::size_t keys = by_bucket_ ? kCategoryCount : catalog_->size();
  buffers_.assign(keys, OutcomeBuffer(capacity));
  competence_.assign(keys, 0.0);
  alp_.assign(keys, 0.0);
}

std::unique_ptr<AlpEstimator> OnlineEstimator::clone() const {
  return std::make_unique<OnlineEstimator>(*this);
}

std::size_t OnlineEstimator::key(GoalId goal) const {
  if (goal < 0 || static_cast<std::size_t>(goal) >= catalog_->size())
    throw UsageError(fmt::format("goal {} is outside the catalog", goal));
  return by_bucket_ ? static_cast<std::size_t>(category_index(catalog_->bucket(goal)))
                    : static_cast<std::size_t>(goal);
}

void OnlineEstimator::observe(GoalId goal, int outcome, std::int64_t) {
  const std::size_t k = key(goal);
  buffers_[k].push(outcome);
  competence_[k] = buffers_[k].recent_mean();
  alp_[k] = buffers_[k].alp();
}

double OnlineEstimator::competence(GoalId goal) const { return competence_[key(goal)]; }
double OnlineEstimator::alp(GoalId goal) const { return alp_[key(goal)]; }

void OnlineEstimator::save_checkpoint(const std::filesystem::path& dir) const {
  json keys = json::array();
  for (const auto& b : buffers_) keys.push_back(std::vector<int>(b.items().begin(), b.items().end()));
  write_json(dir / "state.json", {{"kind", to_string(kind())}, {"buffers", keys}});
}

void OnlineEstimator::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "state.json");
  check_kind(j, kind(), dir);
  const auto& keys = j.at("buffers");
  if (keys.size() != buffers_.size()) throw ValidationError("checkpoint key count differs");
  for (std::size_t k = 0; k < buffers_.size(); ++k) {
    OutcomeBuffer b(buffers_[k].capacity());
    for (int v : keys[k].get<std::vector<int>>()) b.push(v);
    buffers_[k] = std::move(b);
    competence_[k] = buffers_[k].recent_mean();
    alp_[k] = buffers_[k].alp();
  }
}

// ---------------------------------------------------------------------------
// Eval-ALP

EvalEstimator::EvalEstimator(std::shared_ptr<const GoalCatalog> catalog,
                             std::span<const GoalId> pool, bool by_bucket, std::int64_t frequency,
                             int per_key, std::uint64_t seed)
    : catalog_(std::move(catalog)),
      by_bucket_(by_bucket),
      frequency_(frequency),
      per_key_(per_key),
      rng_(seed) {
  const std::size_t keys = by_bucket_ ? kCategoryCount : catalog_->size();
  latest_.assign(keys, 0.0);
  previous_.assign(keys, 0.0);
  set_pool(pool);
}

std::unique_ptr<AlpEstimator> EvalEstimator::clone() const {
  return std::make_unique<EvalEstimator>(*this);
}

void EvalEstimator::set_pool(std::span<const GoalId> goals) {
  pool_.assign(goals.begin(), goals.end());
  for (auto& b : pool_by_bucket_) b.clear();
  for (GoalId g : pool_) pool_by_bucket_[category_index(catalog_->bucket(g))].push_back(g);
}

std::size_t EvalEstimator::key(GoalId goal) const {
  if (goal < 0 || static_cast<std::size_t>(goal) >= catalog_->size())
    throw UsageError(fmt::format("goal {} is outside the catalog", goal));
  return by_bucket_ ? static_cast<std::size_t>(category_index(catalog_->bucket(goal)))
                    : static_cast<std::size_t>(goal);
}

void EvalEstimator::observe(GoalId, int outcome, std::int64_t) { require_binary(outcome); }

double EvalEstimator::competence(GoalId goal) const { return latest_[key(goal)]; }

double EvalEstimator::alp(GoalId goal) const {
  const std::size_t k = key(goal);
  return std::abs(latest_[k] - previous_[k]);
}

std::optional<EvaluationRequest> EvalEstimator::needs_evaluation(std::int64_t episodes_completed) {
  if (episodes_completed <= 0 || episodes_completed % frequency_ != 0) return std::nullopt;
  EvaluationRequest req;
  if (by_bucket_) {
    for (const auto& members : pool_by_bucket_) {
      if (members.empty()) continue;
      for (int i = 0; i < per_key_; ++i) req.goals.push_back(members[uniform_index(rng_, members.size())]);
    }
  } else {
    req.goals.reserve(pool_.size() * static_cast<std::size_t>(per_key_));
    for (GoalId g : pool_)
      for (int i = 0; i < per_key_; ++i) req.goals.push_back(g);
  }
  return req;
}

void EvalEstimator::ingest_evaluation(const EvaluationRequest& request,
                                      std::span<const int> outcomes) {
  if (outcomes.size() != request.goals.size())
    throw UsageError("evaluation outcomes do not match the request");
  std::vector<double> wins(latest_.size(), 0.0), trials(latest_.size(), 0.0);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    require_binary(outcomes[i]);
    const std::size_t k = key(request.goals[i]);
    wins[k] += outcomes[i];
    trials[k] += 1.0;
  }
  for (std::size_t k = 0; k < latest_.size(); ++k) {
    if (trials[k] == 0.0) continue;
    previous_[k] = latest_[k];
    latest_[k] = wins[k] / trials[k];
  }
  cost_ += static_cast<std::int64_t>(outcomes.size());
  ++sweeps_;
}

void EvalEstimator::save_checkpoint(const std::filesystem::path& dir) const {
  write_json(dir / "state.json", {{"kind", to_string(kind())},
                                  {"latest", latest_},
                                  {"previous", previous_},
                                  {"cost", cost_},
                                  {"sweeps", sweeps_},
                                  {"pool", pool_},
                                  {"rng", rng_state(rng_)}});
}

void EvalEstimator::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "state.json");
  check_kind(j, kind(), dir);
  auto latest = j.at("latest").get<std::vector<double>>();
  auto previous = j.at("previous").get<std::vector<double>>();
  if (latest.size() != latest_.size() || previous.size() != previous_.size())
    throw ValidationError("checkpoint key count differs");
  latest_ = std::move(latest);
  previous_ = std::move(previous);
  cost_ = j.at("cost").get<std::int64_t>();
  sweeps_ = j.at("sweeps").get<std::int64_t>();
  set_pool(j.at("pool").get<std::vector<GoalId>>());
  set_rng_state(rng_, j.at("rng").get<std::string>());
}

// ---------------------------------------------------------------------------
// MAGELLAN

MagellanEstimator::MagellanEstimator(std::shared_ptr<const GoalCatalog> catalog,
                                     const EstimatorConfig& config)
    : catalog_(std::move(catalog)),
      config_(config),
      net_(NetShape{catalog_->tokenizer().size(), config.magellan_embed_dim,
                    config.magellan_hidden}),
      params_(net_.make_params(derive_seed(config.seed, "magellan.init"),
                               config.magellan_init_scale)),
      adam_(params_.size(), AdamConfig{.learning_rate = config.magellan_learning_rate}),
      rng_(derive_seed(config.seed, "magellan.batch")) {}

std::unique_ptr<AlpEstimator> MagellanEstimator::clone() const {
  return std::make_unique<MagellanEstimator>(*this);
}

std::vector<double> MagellanEstimator::recency_weights(std::size_t m) {
  std::vector<double> w(m);
  const double total = static_cast<double>(m) * static_cast<double>(m + 1) / 2.0;
  for (std::size_t i = 0; i < m; ++i) w[i] = static_cast<double>(i + 1) / total;
  return w;
}

void MagellanEstimator::observe(GoalId goal, int outcome, std::int64_t episode) {
  require_binary(outcome);
  if (goal < 0 || static_cast<std::size_t>(goal) >= catalog_->size())
    throw UsageError(fmt::format("goal {} is outside the catalog", goal));
  data_.emplace_back(goal, static_cast<std::uint8_t>(outcome));
  if (data_.size() > config_.magellan_data_capacity) data_.pop_front();
  ++observed_;
  if (observed_ % config_.magellan_update_period == 0) update(episode);
}

void MagellanEstimator::update(std::int64_t episode) {
  // The pre-update weights join the history, so the oldest entry is always
  // |B| updates behind the current weights.
  history_.push_back(Past{snapshot(params_, episode), std::move(current_)});
  current_.clear();
  if (history_.size() > config_.magellan_snapshot_capacity) history_.pop_front();

  const auto weights = recency_weights(data_.size());
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<LabelledRow> batch(config_.magellan_batch_size);
  std::vector<double> grad;
  for (int s = 0; s < config_.magellan_steps_per_update; ++s) {
    for (auto& row : batch) {
      const auto& [g, y] = data_[pick(rng_)];
      row = {static_cast<std::size_t>(g), y};
    }
    last_loss_ = batch_gradient(net_, params_, catalog_->tokens(), batch, grad, config_.exec);
    adam_.step(params_, grad);
  }
  ++updates_;
}

namespace {

// Fills the NaN entries of `cache` for `goals` (sized to the catalog on first use).
void fill_predictions(const CompetenceNet& net, const ParamStore& params, const TokenTable& table,
                      std::span<const GoalId> goals, std::vector<double>& cache, Exec exec) {
  if (cache.empty()) cache.assign(table.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> rows;
  for (GoalId g : goals) {
    const auto i = static_cast<std::size_t>(g);
    if (i >= cache.size()) throw UsageError(fmt::format("goal {} is outside the catalog", g));
    if (std::isnan(cache[i])) rows.push_back(i);
  }
  if (rows.empty()) return;
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  std::vector<double> out(rows.size());
  predict_many(net, params, table, rows, out, exec);
  for (std::size_t k = 0; k < rows.size(); ++k) cache[rows[k]] = out[k];
}

}  // namespace

const std::vector<double>& MagellanEstimator::current_predictions(
    std::span<const GoalId> goals) const {
  fill_predictions(net_, params_, catalog_->tokens(), goals, current_, config_.exec);
  return current_;
}

const std::vector<double>& MagellanEstimator::past_predictions(
    const Past& past, std::span<const GoalId> goals) const {
  bool missing = past.predictions.empty();
  if (!missing)
    for (GoalId g : goals)
      if (std::isnan(past.predictions.at(static_cast<std::size_t>(g)))) {
        missing = true;
        break;
      }
  if (missing) {
    const ParamStore p = restore(past.snap);
    fill_predictions(net_, p, catalog_->tokens(), goals, past.predictions, config_.exec);
  }
  return past.predictions;
}

double MagellanEstimator::competence(GoalId goal) const {
  return current_predictions({&goal, 1})[static_cast<std::size_t>(goal)];
}

double MagellanEstimator::alp(GoalId goal) const {
  double out = 0.0;
  alp_many({&goal, 1}, {&out, 1});
  return out;
}

void MagellanEstimator::competence_many(std::span<const GoalId> goals,
                                        std::span<double> out) const {
  const auto& cur = current_predictions(goals);
  for (std::size_t i = 0; i < goals.size(); ++i) out[i] = cur[static_cast<std::size_t>(goals[i])];
}

void MagellanEstimator::alp_many(std::span<const GoalId> goals, std::span<double> out) const {
  if (history_.empty()) {
    for (GoalId g : goals)
      if (g < 0 || static_cast<std::size_t>(g) >= catalog_->size())
        throw UsageError(fmt::format("goal {} is outside the catalog", g));
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  const auto& cur = current_predictions(goals);
  const auto& old = past_predictions(history_.front(), goals);
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const auto g = static_cast<std::size_t>(goals[i]);
    out[i] = std::abs(cur[g] - old[g]);
  }
}

void MagellanEstimator::latent(GoalId goal, std::span<double> out) const {
  net_.latent(params_, catalog_->tokens()[static_cast<std::size_t>(goal)], out);
}

void MagellanEstimator::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  write_snapshot(dir / "params.snap", snapshot(params_, observed_));

  ParamStore moments;
  moments.add_segment("adam.m", 1, params_.size());
  moments.add_segment("adam.v", 1, params_.size());
  std::copy(adam_.first_moment().begin(), adam_.first_moment().end(),
            moments.segment("adam.m").begin());
  std::copy(adam_.second_moment().begin(), adam_.second_moment().end(),
            moments.segment("adam.v").begin());
  moments.set_version(adam_.steps());
  write_snapshot(dir / "adam.snap", snapshot(moments));

  for (std::size_t i = 0; i < history_.size(); ++i)
    write_snapshot(dir / fmt::format("history_{:03}.snap", i), history_[i].snap);

  json data = json::array();
  for (const auto& [g, y] : data_) data.push_back({g, y});
  write_json(dir / "state.json", {{"kind", to_string(kind())},
                                  {"observed", observed_},
                                  {"updates", updates_},
                                  {"history", history_.size()},
                                  {"data", data},
                                  {"rng", rng_state(rng_)}});
}

void MagellanEstimator::load_checkpoint(const std::filesystem::path& dir) {
  const json j = read_json(dir / "state.json");
  check_kind(j, kind(), dir);
  restore_into(params_, read_snapshot(dir / "params.snap"));

  const ParamStore moments = restore(read_snapshot(dir / "adam.snap"));
  const auto m = moments.segment("adam.m"), v = moments.segment("adam.v");
  if (m.size() != params_.size()) throw ValidationError("optimizer state shape differs");
  adam_.restore({m.begin(), m.end()}, {v.begin(), v.end()}, moments.version());

  history_.clear();
  const auto n = j.at("history").get<std::size_t>();
  for (std::size_t i = 0; i < n; ++i) {
    Snapshot s = read_snapshot(dir / fmt::format("history_{:03}.snap", i));
    if (s.segments != params_.segments()) throw ValidationError("history snapshot shape differs");
    history_.push_back(Past{std::move(s), {}});
  }
  data_.clear();
  for (const auto& row : j.at("data"))
    data_.emplace_back(row.at(0).get<GoalId>(), row.at(1).get<std::uint8_t>());
  observed_ = j.at("observed").get<std::int64_t>();
  updates_ = j.at("updates").get<std::int64_t>();
  set_rng_state(rng_, j.at("rng").get<std::string>());
  current_.clear();
}

// ---------------------------------------------------------------------------

CompetenceError competence_error(
    const AlpEstimator& estimator,
    const std::array<std::vector<GoalId>, kCategoryCount>& goals_by_category,
    const std::array<double, kCategoryCount>& reference, std::span<const Category> macro_over) {
  CompetenceError err;
  for (int c = 0; c < kCategoryCount; ++c) {
    const auto& goals = goals_by_category[c];
    if (goals.empty()) continue;
    std::vector<double> comp(goals.size());
    estimator.competence_many(goals, comp);
    const double mean = std::accumulate(comp.begin(), comp.end(), 0.0) / static_cast<double>(comp.size());
    err.per_category[c] = std::abs(mean - reference[c]);
    err.present[c] = true;
  }
  int n = 0;
  for (Category c : macro_over) {
    if (!err.present[category_index(c)]) continue;
    err.macro += err.per_category[category_index(c)];
    ++n;
  }
  if (n > 0) err.macro /= n;
  return err;
}

}  // namespace alplab
