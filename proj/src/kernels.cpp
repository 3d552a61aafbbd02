#include "alplab/kernels.hpp"

#include <algorithm>

#include "alplab/errors.hpp"

#ifdef ALPLAB_HAVE_OPENMP
#include <omp.h>
#endif

namespace alplab {

namespace {
constexpr std::size_t kGradChunk = 32;
}

void TokenTable::push(std::span<const int> tokens) {
  tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  offsets_.push_back(tokens_.size());
}

bool parallel_available() {
#ifdef ALPLAB_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef ALPLAB_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void predict_many(const CompetenceNet& net, const ParamStore& params, const TokenTable& table,
                  std::span<const std::size_t> rows, std::span<double> out, Exec exec) {
  if (out.size() != rows.size()) throw UsageError("predict_many: output size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  if (exec == Exec::Serial || !parallel_available()) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = net.forward(params, table[rows[i]]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = net.forward(params, table[rows[i]]);
}

double batch_gradient(const CompetenceNet& net, const ParamStore& params, const TokenTable& table,
                      std::span<const LabelledRow> batch, std::vector<double>& grad, Exec exec) {
  if (batch.empty()) throw ValidationError("batch_gradient on an empty batch");
  for (const auto& s : batch)
    if (s.outcome != 0 && s.outcome != 1) throw ValidationError("outcome is not binary");

  const std::size_t P = params.size();
  const std::size_t chunks = (batch.size() + kGradChunk - 1) / kGradChunk;
  const double w = 1.0 / static_cast<double>(batch.size());
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(P, 0.0));
  std::vector<double> losses(chunks, 0.0);

  auto run_chunk = [&](std::size_t c) {
    const std::size_t lo = c * kGradChunk, hi = std::min(batch.size(), lo + kGradChunk);
    for (std::size_t i = lo; i < hi; ++i)
      losses[c] += net.accumulate_gradient(params, table[batch[i].row], batch[i].outcome, w,
                                           partial[c]);
  };
  if (exec == Exec::Serial || !parallel_available()) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    const auto nc = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < nc; ++c) run_chunk(static_cast<std::size_t>(c));
  }

  grad.assign(P, 0.0);
  double loss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t j = 0; j < P; ++j) grad[j] += partial[c][j];
    loss += losses[c];
  }
  return loss * w;
}

std::vector<GoalId> classify_bfs_mismatches(const GoalSpace& space, Exec exec) {
  const auto& goals = space.goals();
  const auto n = static_cast<std::ptrdiff_t>(goals.size());
  std::vector<char> bad(goals.size(), 0);
  auto check = [&](std::ptrdiff_t i) {
    const Goal& g = goals[static_cast<std::size_t>(i)];
    const bool rule = classify(space.vocabulary(), g).feasible();
    bad[static_cast<std::size_t>(i)] = rule != feasible_bfs(g).feasible || rule != g.feasible;
  };
  if (exec == Exec::Serial || !parallel_available()) {
    for (std::ptrdiff_t i = 0; i < n; ++i) check(i);
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) check(i);
  }
  std::vector<GoalId> out;
  for (std::size_t i = 0; i < bad.size(); ++i)
    if (bad[i]) out.push_back(goals[i].id);
  return out;
}

}  // namespace alplab
