#include "alplab/plotdata.hpp"

#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "alplab/errors.hpp"
#include "json_io.hpp"

namespace alplab {

namespace {

double metric_of(const SweepRecord& r, const std::string& metric) {
  if (metric == "sr") return r.sr;
  if (metric == "estimator_competence") return r.estimator_competence;
  if (metric == "reference_competence") return r.reference_competence;
  if (metric == "cumulative_cost") return static_cast<double>(r.cumulative_cost);
  throw ConfigError(fmt::format("unknown metric '{}'", metric));
}

std::string num(double v) { return std::isnan(v) ? "" : fmt::format("{:.6g}", v); }

}  // namespace

PlotRun load_plot_run(const std::filesystem::path& dir) {
  PlotRun r;
  r.dir = dir;
  const auto summary = detail::read_json(dir / "run_summary.json");
  r.method = summary.at("method").get<std::string>();
  r.seed = summary.at("seed").get<std::uint64_t>();
  r.sweeps = read_sweeps_csv(dir / "evals.csv");
  return r;
}

std::int64_t sweep_cadence(std::span<const SweepRecord> sweeps) {
  std::set<std::int64_t> eps;
  for (const auto& s : sweeps) eps.insert(s.episode);
  if (eps.size() < 2) return 0;
  auto it = eps.begin();
  const std::int64_t first = *it++;
  const std::int64_t cadence = *it - first;
  for (auto prev = *it++; it != eps.end(); prev = *it++)
    if (*it - prev != cadence) return -1;
  return cadence;
}

void emit_plot_data(std::span<const PlotRun> runs, const std::string& metric, std::ostream& out) {
  if (runs.empty()) throw UsageError("no runs to aggregate");
  metric_of(SweepRecord{}, metric);

  std::map<std::int64_t, std::vector<std::string>> by_cadence;
  for (const auto& r : runs) by_cadence[sweep_cadence(r.sweeps)].push_back(r.dir.string());
  if (by_cadence.size() > 1 || by_cadence.begin()->first < 0) {
    std::string msg = "runs do not share an eval cadence:";
    for (const auto& [c, dirs] : by_cadence)
      for (const auto& d : dirs) msg += fmt::format(" {} ({})", d, c < 0 ? "irregular" : fmt::to_string(c));
    throw ValidationError(msg);
  }

  std::set<std::int64_t> episodes;
  for (const auto& r : runs)
    for (const auto& s : r.sweeps) episodes.insert(s.episode);

  // (method, episode, category) -> values over that method's runs
  using Key = std::tuple<std::string, std::int64_t, int>;
  std::map<Key, std::vector<double>> values;
  std::vector<std::tuple<const PlotRun*, std::int64_t, Category, double>> rows;
  for (const auto& r : runs) {
    std::map<std::pair<std::int64_t, int>, double> mine;
    for (const auto& s : r.sweeps)
      if (s.n_goals > 0) mine[{s.episode, category_index(s.category)}] = metric_of(s, metric);
    for (auto e : episodes)
      for (auto c : kAllCategories) {
        auto it = mine.find({e, category_index(c)});
        const double v = it == mine.end() ? std::nan("") : it->second;
        rows.emplace_back(&r, e, c, v);
        if (!std::isnan(v)) values[{r.method, e, category_index(c)}].push_back(v);
      }
  }

  out << "method,seed,episode,category,value,mean,std,gap\n";
  for (const auto& [run, e, c, v] : rows) {
    const auto& vs = values[{run->method, e, category_index(c)}];
    double mean = std::nan(""), sd = std::nan("");
    if (!vs.empty()) {
      mean = 0.0;
      for (double x : vs) mean += x;
      mean /= static_cast<double>(vs.size());
      sd = 0.0;
      for (double x : vs) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(vs.size()));
    }
    fmt::print(out, "{},{},{},{},{},{},{},{}\n", run->method, run->seed, e, to_string(c), num(v),
               num(mean), num(sd), std::isnan(v) ? 1 : 0);
  }
}

}  // namespace alplab
