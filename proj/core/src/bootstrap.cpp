#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <tuple>

#include "gustrl/metrics.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

namespace {

double pooled_mean(const ClusteredSample& sample) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& cluster : sample) {
    for (double v : cluster) sum += v;
    n += cluster.size();
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double resampled_mean(const ClusteredSample& sample, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick_cluster(0, sample.size() - 1);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < sample.size(); ++c) {
    const auto& cluster = sample[pick_cluster(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, cluster.size() - 1);
    for (std::size_t i = 0; i < cluster.size(); ++i) sum += cluster[pick(rng)];
    n += cluster.size();
  }
  return sum / static_cast<double>(n);
}

ClusteredSample shifted(ClusteredSample sample, double shift) {
  for (auto& cluster : sample)
    for (double& v : cluster) v += shift;
  return sample;
}

void require_clusters(const ClusteredSample& sample, const std::string& name) {
  std::size_t usable = 0;
  for (const auto& c : sample) usable += c.empty() ? 0 : 1;
  if (usable < 2 || usable != sample.size())
    throw std::invalid_argument("cluster bootstrap: group '" + name + "' needs at least two non-empty clusters");
}

}  // namespace

double cluster_bootstrap_p_value(const ClusteredSample& a_in, const ClusteredSample& b_in, int resamples,
                                 std::uint64_t seed) {
  if (resamples <= 0) throw std::invalid_argument("cluster bootstrap: resamples must be > 0");
  require_clusters(a_in, "a");
  require_clusters(b_in, "b");

  // Fixed processing order regardless of argument order keeps p(a, b) == p(b, a).
  const bool swap = b_in < a_in;
  const ClusteredSample& first = swap ? b_in : a_in;
  const ClusteredSample& second = swap ? a_in : b_in;

  const double mean_first = pooled_mean(first);
  const double mean_second = pooled_mean(second);
  const double observed = std::abs(mean_first - mean_second);

  double total = 0.0;
  std::size_t count = 0;
  for (const auto* s : {&first, &second})
    for (const auto& c : *s) {
      for (double v : c) total += v;
      count += c.size();
    }
  const double grand = total / static_cast<double>(count);
  const auto null_first = shifted(first, grand - mean_first);
  const auto null_second = shifted(second, grand - mean_second);

  Rng rng(seed);
  int extreme = 0;
  for (int r = 0; r < resamples; ++r) {
    const double d = resampled_mean(null_first, rng) - resampled_mean(null_second, rng);
    if (std::abs(d) >= observed) ++extreme;
  }
  return (1.0 + extreme) / (1.0 + resamples);
}

namespace {

double metric_value(const GustTestRecord& r, ComparisonMetric metric,
                    const std::map<std::tuple<FlightCondition, TapConfig, double>, double>& cell_means) {
  switch (metric) {
    case ComparisonMetric::SettledGrp: return r.settled_grp;
    case ComparisonMetric::Consistency:
      return std::abs(r.settled_grp - cell_means.at({r.condition, r.taps, r.deflection_deg}));
    case ComparisonMetric::RiseTime: return r.rise_time_s.value_or(NAN);
  }
  return NAN;
}

}  // namespace

std::vector<TapComparison> compare_tap_configs(std::span<const GustTestRecord> records, ComparisonMetric metric,
                                               int resamples, std::uint64_t seed) {
  std::map<std::tuple<FlightCondition, TapConfig, double>, std::vector<double>> cells;
  for (const auto& r : records) cells[{r.condition, r.taps, r.deflection_deg}].push_back(r.settled_grp);
  std::map<std::tuple<FlightCondition, TapConfig, double>, double> cell_means;
  for (const auto& [key, values] : cells) cell_means[key] = mean(values);

  // condition -> taps -> controller -> values
  std::map<FlightCondition, std::map<TapConfig, std::map<std::string, std::vector<double>>>> groups;
  for (const auto& r : records) {
    const double v = metric_value(r, metric, cell_means);
    if (std::isnan(v)) continue;  // unmeasurable rise times are excluded
    groups[r.condition][r.taps][r.controller_id].push_back(v);
  }

  std::vector<TapComparison> out;
  for (const auto& [condition, by_taps] : groups) {
    for (auto ia = by_taps.begin(); ia != by_taps.end(); ++ia) {
      for (auto ib = std::next(ia); ib != by_taps.end(); ++ib) {
        auto to_sample = [&](const auto& by_controller, TapConfig taps) {
          ClusteredSample s;
          for (const auto& [id, values] : by_controller) s.push_back(values);
          if (s.size() < 2)
            throw std::invalid_argument("compare_tap_configs: group " + std::string(to_string(condition)) + "/" +
                                        std::to_string(static_cast<int>(taps)) +
                                        "-tap has fewer than two controllers");
          return s;
        };
        const auto a = to_sample(ia->second, ia->first);
        const auto b = to_sample(ib->second, ib->first);
        TapComparison row;
        row.condition = condition;
        row.metric = metric;
        row.taps_a = ia->first;
        row.taps_b = ib->first;
        row.mean_a = pooled_mean(a);
        row.mean_b = pooled_mean(b);
        row.effect = row.mean_a - row.mean_b;
        row.resamples = resamples;
        row.clusters_a = static_cast<int>(a.size());
        row.clusters_b = static_cast<int>(b.size());
        const std::string label = std::string(to_string(condition)) + "/" + std::string(to_string(metric)) + "/" +
                                  std::to_string(static_cast<int>(row.taps_a)) + "v" +
                                  std::to_string(static_cast<int>(row.taps_b));
        row.p_value = cluster_bootstrap_p_value(a, b, resamples, derive_seed(seed, label));
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

}  // namespace gustrl
