#pragma once

#include <cstdint>
#include <span>

namespace alplab {

struct WilcoxonResult {
  int n = 0;              // pairs with a nonzero difference
  double w_plus = 0.0;    // rank sum of positive differences
  double p_value = 1.0;
};

// Exact one-sided signed-rank test of H1: x - y tends to be positive. Zero
// differences are dropped, tied magnitudes get mid-ranks, and the null
// distribution is counted exactly over all 2^n sign assignments.
WilcoxonResult wilcoxon_greater(std::span<const double> x, std::span<const double> y);

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

// Upper tail of the chi-square distribution.
double chi_square_sf(double statistic, int dof);

// Goodness of fit of `observed` counts to `probabilities` (normalized here).
// Cells with zero probability are dropped; any count in one gives p = 0.
ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed,
                               std::span<const double> probabilities);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

// p +/- z sqrt(p (1 - p) / n): bounds on an observed success fraction.
Interval binomial_frequency_bounds(std::int64_t n, double p, double z = 3.0);

}  // namespace alplab
