#include "alplab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "alplab/errors.hpp"

namespace alplab {

WilcoxonResult wilcoxon_greater(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("paired samples must have equal length");
  std::vector<double> d;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) d.push_back(x[i] - y[i]);

  WilcoxonResult r;
  r.n = static_cast<int>(d.size());
  if (r.n == 0) return r;

  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  // Doubled mid-ranks stay integral.
  std::vector<int> rank2(d.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const int mid2 = static_cast<int>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = mid2;
    i = j + 1;
  }

  int observed2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i] > 0) observed2 += rank2[i];
  r.w_plus = observed2 / 2.0;

  const int total2 = std::accumulate(rank2.begin(), rank2.end(), 0);
  std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
  ways[0] = 1.0;
  for (int rk : rank2)
    for (int s = total2; s >= rk; --s) ways[s] += ways[s - rk];

  double tail = 0.0;
  for (int s = observed2; s <= total2; ++s) tail += ways[s];
  r.p_value = std::min(1.0, tail / std::ldexp(1.0, r.n));
  return r;
}

double chi_square_sf(double statistic, int dof) {
  if (dof <= 0) throw UsageError("chi-square needs a positive number of degrees of freedom");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed,
                               std::span<const double> probabilities) {
  if (observed.size() != probabilities.size())
    throw UsageError("observed counts and probabilities differ in length");
  const double psum = std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
  if (!(psum > 0.0)) throw UsageError("probabilities must have a positive sum");
  const double n = static_cast<double>(std::accumulate(observed.begin(), observed.end(),
                                                       std::int64_t{0}));
  ChiSquareResult r;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probabilities[i] < 0.0) throw UsageError("negative probability");
    if (probabilities[i] == 0.0) {
      if (observed[i] != 0) {
        r.p_value = 0.0;
        r.statistic = std::numeric_limits<double>::infinity();
        return r;
      }
      continue;
    }
    const double e = n * probabilities[i] / psum;
    const double diff = static_cast<double>(observed[i]) - e;
    r.statistic += diff * diff / e;
    ++cells;
  }
  r.dof = cells - 1;
  r.p_value = r.dof > 0 ? chi_square_sf(r.statistic, r.dof) : 1.0;
  return r;
}

Interval binomial_frequency_bounds(std::int64_t n, double p, double z) {
  if (n <= 0) throw UsageError("binomial bounds need n > 0");
  const double nn = static_cast<double>(n);
  const double half = z * std::sqrt(nn * p * (1.0 - p));
  return {(nn * p - half) / nn, (nn * p + half) / nn};
}

}  // namespace alplab
