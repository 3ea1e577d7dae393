#include "gustrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace gustrl {

GrpTrace grp_timeseries(std::span<const double> controlled_lift, std::span<const double> baseline_lift,
                        double baseline_lift_n, std::size_t first, std::size_t length, double dt) {
  if (controlled_lift.size() != baseline_lift.size())
    throw std::invalid_argument("grp_timeseries: controlled and baseline traces differ in length");
  if (length == 0 || first + length > controlled_lift.size())
    throw std::invalid_argument("grp_timeseries: gust window outside the traces");
  if (!(dt > 0.0)) throw std::invalid_argument("grp_timeseries: dt must be > 0");

  double baseline_sum = 0.0;
  for (std::size_t i = 0; i < length; ++i) baseline_sum += baseline_lift[first + i] - baseline_lift_n;
  const double baseline_delta = baseline_sum / static_cast<double>(length);
  if (std::abs(baseline_delta) < kDegenerateGustLiftN)
    throw std::domain_error("grp_timeseries: degenerate gust (mean baseline lift change below 1e-6 N)");

  GrpTrace trace;
  trace.baseline_delta_n = baseline_delta;
  trace.timestep_s = dt;
  trace.times_s.resize(length);
  trace.grp.resize(length);
  trace.controlled_delta_n.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    const double delta = controlled_lift[first + i] - baseline_lift_n;
    trace.times_s[i] = static_cast<double>(i) * dt;
    trace.controlled_delta_n[i] = delta;
    trace.grp[i] = (1.0 - std::abs(delta) / std::abs(baseline_delta)) * 100.0;
  }
  return trace;
}

double settled_grp(const GrpTrace& trace) {
  const std::size_t n = trace.grp.size();
  if (n == 0) throw std::invalid_argument("settled_grp: empty trace");
  const std::size_t start = n / 2;
  const double sum = std::accumulate(trace.grp.begin() + static_cast<std::ptrdiff_t>(start), trace.grp.end(), 0.0);
  return sum / static_cast<double>(n - start);
}

std::optional<double> rise_time(const GrpTrace& trace, double settled) {
  if (!(settled > 0.0) || trace.grp.empty()) return std::nullopt;
  const double dt = trace.timestep_s > 0.0
                        ? trace.timestep_s
                        : (trace.times_s.size() > 1 ? trace.times_s[1] - trace.times_s[0] : 0.0);
  if (!(dt > 0.0)) return std::nullopt;

  auto crossing = [&](double level) -> std::optional<double> {
    double prev_t = trace.times_s.front() - dt;
    double prev_v = 0.0;
    for (std::size_t i = 0; i < trace.grp.size(); ++i) {
      const double t = trace.times_s[i];
      const double v = trace.grp[i];
      if (v >= level) {
        return prev_t + (level - prev_v) / (v - prev_v) * (t - prev_t);
      }
      prev_t = t;
      prev_v = v;
    }
    return std::nullopt;
  };

  const auto t10 = crossing(0.1 * settled);
  const auto t90 = crossing(0.9 * settled);
  if (!t10 || !t90) return std::nullopt;
  return *t90 - *t10;
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double sq = 0.0;
  for (double v : values) sq += (v - m) * (v - m);
  return std::sqrt(sq / static_cast<double>(values.size()));
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ConsistencySummary consistency_stds(std::span<const GustTestRecord> records) {
  // (controller, deflection) -> settled values across repetitions
  std::map<std::pair<std::string, double>, std::vector<double>> cells;
  for (const auto& r : records) cells[{r.controller_id, r.deflection_deg}].push_back(r.settled_grp);

  ConsistencySummary out;
  std::vector<double> within;
  std::map<std::string, std::vector<double>> per_controller;  // per-deflection means
  std::map<double, std::vector<double>> per_deflection;       // per-controller means
  for (const auto& [key, values] : cells) {
    if (values.size() >= 2) {
      within.push_back(population_std(values));
    } else {
      ++out.excluded_groups;
    }
    const double m = mean(values);
    per_controller[key.first].push_back(m);
    per_deflection[key.second].push_back(m);
  }

  std::vector<double> across_conditions;
  for (const auto& [id, means] : per_controller) {
    if (means.size() >= 2) {
      across_conditions.push_back(population_std(means));
    } else {
      ++out.excluded_groups;
    }
  }
  std::vector<double> across_controllers;
  for (const auto& [d, means] : per_deflection) {
    if (means.size() >= 2) {
      across_controllers.push_back(population_std(means));
    } else {
      ++out.excluded_groups;
    }
  }
  out.within_test = mean(within);
  out.across_conditions = mean(across_conditions);
  out.across_controllers = mean(across_controllers);
  return out;
}

namespace {

CellSummary summarize_cell(FlightCondition condition, TapConfig taps, std::optional<double> deflection,
                           const std::vector<const GustTestRecord*>& members) {
  CellSummary row;
  row.condition = condition;
  row.taps = taps;
  row.deflection_deg = deflection;
  std::vector<double> settled, rises;
  for (const auto* r : members) {
    settled.push_back(r->settled_grp);
    if (r->rise_time_s) {
      rises.push_back(*r->rise_time_s);
    } else {
      ++row.unmeasurable;
    }
  }
  row.n = static_cast<int>(members.size());
  row.mean_settled_grp = mean(settled);
  row.std_settled_grp = population_std(settled);
  if (!rises.empty()) {
    row.mean_rise_time_s = mean(rises);
    row.median_rise_time_s = median(rises);
  }
  return row;
}

}  // namespace

std::vector<CellSummary> summarize(std::span<const GustTestRecord> records) {
  std::map<std::pair<FlightCondition, TapConfig>, std::vector<const GustTestRecord*>> pooled;
  std::map<std::tuple<FlightCondition, TapConfig, double>, std::vector<const GustTestRecord*>> by_deflection;
  for (const auto& r : records) {
    pooled[{r.condition, r.taps}].push_back(&r);
    by_deflection[{r.condition, r.taps, r.deflection_deg}].push_back(&r);
  }
  std::vector<CellSummary> rows;
  for (const auto& [key, members] : pooled) rows.push_back(summarize_cell(key.first, key.second, std::nullopt, members));
  for (const auto& [key, members] : by_deflection)
    rows.push_back(summarize_cell(std::get<0>(key), std::get<1>(key), std::get<2>(key), members));
  return rows;
}

std::string_view to_string(ComparisonMetric metric) {
  switch (metric) {
    case ComparisonMetric::SettledGrp: return "settled_grp";
    case ComparisonMetric::Consistency: return "consistency";
    case ComparisonMetric::RiseTime: return "rise_time";
  }
  return "unknown";
}

}  // namespace gustrl
