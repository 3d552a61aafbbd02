#pragma once

// Data-parallel hot loops. Every kernel has a serial reference and an
// OpenMP variant; both produce bit-identical results for any thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "alplab/goalspace.hpp"
#include "alplab/tinynet.hpp"

namespace alplab {

enum class Exec { Serial, Parallel };

// Token sequences for many goals, stored back to back.
class TokenTable {
 public:
  void push(std::span<const int> tokens);
  std::span<const int> operator[](std::size_t i) const {
    return {tokens_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::size_t size() const { return offsets_.size() - 1; }

 private:
  std::vector<int> tokens_;
  std::vector<std::size_t> offsets_{0};
};

bool parallel_available();
int max_threads();

// out[i] = forward(params, table[rows[i]]).
void predict_many(const CompetenceNet& net, const ParamStore& params, const TokenTable& table,
                  std::span<const std::size_t> rows, std::span<double> out, Exec exec);

struct LabelledRow {
  std::size_t row = 0;
  int outcome = 0;
};

// Mean-BCE gradient over the batch, written to `grad` (resized). The batch is
// cut into fixed-size chunks whose partial sums are added in chunk order, so
// the result does not depend on the number of threads. Returns the mean loss.
double batch_gradient(const CompetenceNet& net, const ParamStore& params, const TokenTable& table,
                      std::span<const LabelledRow> batch, std::vector<double>& grad, Exec exec);

// Goals whose classify() verdict disagrees with the exhaustive search.
std::vector<GoalId> classify_bfs_mismatches(const GoalSpace& space, Exec exec);

}  // namespace alplab
