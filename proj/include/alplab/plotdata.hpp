#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "alplab/harness.hpp"

namespace alplab {

struct PlotRun {
  std::filesystem::path dir;
  std::string method;
  std::uint64_t seed = 0;
  std::vector<SweepRecord> sweeps;
};

// Reads evals.csv and run_summary.json from a run directory.
PlotRun load_plot_run(const std::filesystem::path& dir);

// Eval cadence of a run: the spacing of its sweep episodes (0 with one sweep).
std::int64_t sweep_cadence(std::span<const SweepRecord> sweeps);

// Long CSV: method, seed, episode, category, value, mean, std, gap. mean and
// std are over the seeds of a method at each (episode, category); a run
// without a value there gets a gap row. Metrics: sr, estimator_competence,
// reference_competence, cumulative_cost. Runs with different cadences are
// rejected.
void emit_plot_data(std::span<const PlotRun> runs, const std::string& metric, std::ostream& out);

}  // namespace alplab
