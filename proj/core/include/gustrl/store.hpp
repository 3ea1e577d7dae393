#pragma once

#include <filesystem>
#include <mutex>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "gustrl/metrics.hpp"
#include "gustrl/record.hpp"

namespace gustrl {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Summary fields only; traces live in the sidecar named by "trace_file".
nlohmann::json record_to_json(const GustTestRecord& record);
GustTestRecord record_from_json(const nlohmann::json& doc);

/// Sidecar body: a "lift" line and a "grp" line of comma-separated values.
std::string trace_csv(const GustTestRecord& record);
void parse_trace_csv(const std::string& text, GustTestRecord& record);
std::string trace_file_name(const GustTestRecord& record);

/// Append-only records.jsonl plus traces/<hash>.csv under one directory.
/// Appends are serialized; each line is written whole and flushed. A torn final
/// line left by an interrupted run is dropped on open.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path dir);

  bool contains(const std::string& key) const;
  /// False (and nothing written) when a record with the same key already exists.
  bool append(const GustTestRecord& record);
  std::size_t size() const;

  std::vector<GustTestRecord> load(bool with_traces = false) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path records_path() const { return dir_ / "records.jsonl"; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::unordered_set<std::string> keys_;
};

std::string summary_table(std::span<const CellSummary> rows);
std::string significance_table(std::span<const TapComparison> rows);
/// Header plus one row per (condition, taps) group.
std::string consistency_table(std::span<const GustTestRecord> records);
/// One row per record: the settled GRP / rise time distribution.
std::string distribution_table(std::span<const GustTestRecord> records);

std::string reward_curve_table(std::span<const double> rewards, std::span<const double> running_average);

}  // namespace gustrl
