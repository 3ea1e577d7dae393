#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gustrl/record.hpp"

namespace gustrl {

/// Gust rejection percentage over a gust window:
///   grp(t) = (1 - |dL_C(t)| / |mean dL_B|) * 100
/// Overcompensation gives negative values; nothing is clamped.
struct GrpTrace {
  std::vector<double> times_s;  // relative to the first gust sample
  std::vector<double> grp;
  std::vector<double> controlled_delta_n;
  double baseline_delta_n = 0.0;
  double timestep_s = 0.0;
};

inline constexpr double kDegenerateGustLiftN = 1e-6;

/// Both lift traces cover the same timestep grid; [first, first + length) is the gust window.
/// Throws std::domain_error when |mean baseline change| < 1e-6 N.
GrpTrace grp_timeseries(std::span<const double> controlled_lift, std::span<const double> baseline_lift,
                        double baseline_lift_n, std::size_t first, std::size_t length, double dt);

/// Mean GRP over the second half of the window; the midpoint sample of an odd-length trace is included.
double settled_grp(const GrpTrace& trace);

/// Time from 10% to 90% of `settled`, linearly interpolated. The sample before the window
/// is taken as 0% rejection. Empty when settled <= 0 or a threshold is never reached.
std::optional<double> rise_time(const GrpTrace& trace, double settled);

double mean(std::span<const double> values);
/// Divides by n.
double population_std(std::span<const double> values);
double median(std::vector<double> values);

/// The three consistency measures, all averages of population STDs of settled GRP:
/// within_test across repetitions of (controller, deflection), across_conditions of
/// per-deflection means within a controller, across_controllers of per-controller
/// means within a deflection.
struct ConsistencySummary {
  double within_test = 0.0;
  double across_conditions = 0.0;
  double across_controllers = 0.0;
  int excluded_groups = 0;  // groups with fewer than two members
};

ConsistencySummary consistency_stds(std::span<const GustTestRecord> records);

struct CellSummary {
  FlightCondition condition = FlightCondition::HighLift;
  TapConfig taps = TapConfig::Six;
  std::optional<double> deflection_deg;  // empty: all gust conditions pooled
  double mean_settled_grp = 0.0;
  double std_settled_grp = 0.0;
  std::optional<double> median_rise_time_s;
  std::optional<double> mean_rise_time_s;
  int n = 0;
  int unmeasurable = 0;
};

/// One pooled row per (condition, taps) followed by one row per gust deflection.
std::vector<CellSummary> summarize(std::span<const GustTestRecord> records);

enum class ComparisonMetric { SettledGrp, Consistency, RiseTime };
std::string_view to_string(ComparisonMetric metric);

inline constexpr std::string_view kBootstrapMethod = "hierarchical cluster bootstrap (controllers, then repetitions)";

/// Values grouped by cluster (one inner vector per trained controller).
using ClusteredSample = std::vector<std::vector<double>>;

/// Two-sided p-value for a difference in means under a two-level bootstrap of the
/// null (each sample shifted to the pooled mean). Symmetric in its arguments.
double cluster_bootstrap_p_value(const ClusteredSample& a, const ClusteredSample& b, int resamples,
                                 std::uint64_t seed);

struct TapComparison {
  FlightCondition condition = FlightCondition::HighLift;
  ComparisonMetric metric = ComparisonMetric::SettledGrp;
  TapConfig taps_a = TapConfig::One;
  TapConfig taps_b = TapConfig::Six;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double effect = 0.0;  // mean_a - mean_b
  double p_value = 1.0;
  int resamples = 0;
  int clusters_a = 0;
  int clusters_b = 0;
  std::string method{kBootstrapMethod};
};

/// Every tap-config pair within every flight condition present in `records`.
/// Throws std::invalid_argument naming the group when a side has fewer than two controllers.
std::vector<TapComparison> compare_tap_configs(std::span<const GustTestRecord> records, ComparisonMetric metric,
                                               int resamples, std::uint64_t seed);

}  // namespace gustrl
