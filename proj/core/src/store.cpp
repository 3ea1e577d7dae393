#include "gustrl/store.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "gustrl/policy_file.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

namespace fs = std::filesystem;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw std::runtime_error("trace file: bad number '" + std::string(text) + "'");
  return value;
}

std::string join(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> split(std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(parse_double(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::string trace_file_name(const GustTestRecord& record) {
  return sha256_hex(record.key()).substr(0, 24) + ".csv";
}

nlohmann::json record_to_json(const GustTestRecord& r) {
  nlohmann::json doc;
  doc["key"] = r.key();
  doc["controller_id"] = r.controller_id;
  doc["condition"] = std::string(to_string(r.condition));
  doc["taps"] = static_cast<int>(r.taps);
  doc["deflection_deg"] = r.deflection_deg;
  doc["repetition"] = r.repetition;
  doc["seed"] = r.seed;
  doc["baseline_delta_n"] = r.baseline_delta_n;
  doc["settled_grp"] = r.settled_grp;
  doc["rise_time_s"] = r.rise_time_s ? nlohmann::json(*r.rise_time_s) : nlohmann::json(nullptr);
  doc["metadata_hash"] = r.metadata_hash;
  doc["trace_file"] = "traces/" + trace_file_name(r);
  return doc;
}

GustTestRecord record_from_json(const nlohmann::json& doc) {
  GustTestRecord r;
  r.controller_id = doc.at("controller_id").get<std::string>();
  r.condition = parse_flight_condition(doc.at("condition").get<std::string>());
  r.taps = tap_config_from_count(doc.at("taps").get<int>());
  r.deflection_deg = doc.at("deflection_deg").get<double>();
  r.repetition = doc.at("repetition").get<int>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.baseline_delta_n = doc.at("baseline_delta_n").get<double>();
  r.settled_grp = doc.at("settled_grp").get<double>();
  if (!doc.at("rise_time_s").is_null()) r.rise_time_s = doc.at("rise_time_s").get<double>();
  r.metadata_hash = doc.at("metadata_hash").get<std::string>();
  return r;
}

std::string trace_csv(const GustTestRecord& r) {
  return "lift," + join(r.lift_trace) + "\ngrp," + join(r.grp_trace) + "\n";
}

void parse_trace_csv(const std::string& text, GustTestRecord& r) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view(line);
    if (view.starts_with("lift,")) {
      r.lift_trace = split(view.substr(5));
    } else if (view.starts_with("grp,")) {
      r.grp_trace = split(view.substr(4));
    } else if (view == "lift" || view == "grp") {
      (view == "lift" ? r.lift_trace : r.grp_trace).clear();
    } else if (!view.empty()) {
      throw std::runtime_error("trace file: unexpected line for " + r.key());
    }
  }
}

ResultsStore::ResultsStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_ / "traces");
  const auto path = records_path();
  if (!fs::exists(path)) return;

  std::string text;
  {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (!text.empty() && text.back() != '\n') {
    const auto last = text.rfind('\n');
    text.resize(last == std::string::npos ? 0 : last + 1);
    fs::resize_file(path, text.size());
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    keys_.insert(nlohmann::json::parse(line).at("key").get<std::string>());
  }
}

bool ResultsStore::contains(const std::string& key) const {
  std::lock_guard lock(mutex_);
  return keys_.contains(key);
}

std::size_t ResultsStore::size() const {
  std::lock_guard lock(mutex_);
  return keys_.size();
}

bool ResultsStore::append(const GustTestRecord& record) {
  const auto key = record.key();
  const auto doc = record_to_json(record);
  std::lock_guard lock(mutex_);
  if (keys_.contains(key)) return false;
  write_file_atomic(dir_ / doc["trace_file"].get<std::string>(), trace_csv(record));
  std::ofstream out(records_path(), std::ios::binary | std::ios::app);
  out << doc.dump() << '\n';
  out.flush();
  if (!out) throw std::runtime_error("cannot append to " + records_path().string());
  keys_.insert(key);
  return true;
}

std::vector<GustTestRecord> ResultsStore::load(bool with_traces) const {
  std::lock_guard lock(mutex_);
  std::vector<GustTestRecord> out;
  std::ifstream in(records_path(), std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto doc = nlohmann::json::parse(line);
    auto record = record_from_json(doc);
    if (with_traces) {
      const auto bytes = read_file_bytes(dir_ / doc.at("trace_file").get<std::string>());
      parse_trace_csv(std::string(bytes.begin(), bytes.end()), record);
    }
    out.push_back(std::move(record));
  }
  return out;
}

std::string summary_table(std::span<const CellSummary> rows) {
  std::string out =
      "condition\ttaps\tdeflection_deg\tmean_settled_grp\tstd_settled_grp\tmedian_rise_time_s\tmean_rise_time_s\tn\t"
      "unmeasurable\n";
  for (const auto& row : rows) {
    out += std::string(to_string(row.condition)) + '\t' + std::to_string(static_cast<int>(row.taps)) + '\t' +
           (row.deflection_deg ? format_double(*row.deflection_deg) : "all") + '\t' +
           format_double(row.mean_settled_grp) + '\t' + format_double(row.std_settled_grp) + '\t' +
           optional_cell(row.median_rise_time_s) + '\t' + optional_cell(row.mean_rise_time_s) + '\t' +
           std::to_string(row.n) + '\t' + std::to_string(row.unmeasurable) + '\n';
  }
  return out;
}

std::string significance_table(std::span<const TapComparison> rows) {
  std::string out = "condition\tmetric\ttaps_a\ttaps_b\tmean_a\tmean_b\teffect\tp_value\tresamples\tclusters_a\t"
                    "clusters_b\tmethod\n";
  for (const auto& row : rows) {
    out += std::string(to_string(row.condition)) + '\t' + std::string(to_string(row.metric)) + '\t' +
           std::to_string(static_cast<int>(row.taps_a)) + '\t' + std::to_string(static_cast<int>(row.taps_b)) +
           '\t' + format_double(row.mean_a) + '\t' + format_double(row.mean_b) + '\t' + format_double(row.effect) +
           '\t' + format_double(row.p_value) + '\t' + std::to_string(row.resamples) + '\t' +
           std::to_string(row.clusters_a) + '\t' + std::to_string(row.clusters_b) + '\t' + row.method + '\n';
  }
  return out;
}

std::string consistency_table(std::span<const GustTestRecord> records) {
  std::map<std::pair<FlightCondition, TapConfig>, std::vector<GustTestRecord>> groups;
  for (const auto& r : records) groups[{r.condition, r.taps}].push_back(r);
  std::string out = "condition\ttaps\twithin_test_std\tacross_conditions_std\tacross_controllers_std\texcluded_groups\n";
  for (const auto& [group, members] : groups) {
    const auto c = consistency_stds(members);
    out += std::string(to_string(group.first)) + '\t' + std::to_string(static_cast<int>(group.second)) + '\t' +
           format_double(c.within_test) + '\t' + format_double(c.across_conditions) + '\t' +
           format_double(c.across_controllers) + '\t' + std::to_string(c.excluded_groups) + '\n';
  }
  return out;
}

std::string distribution_table(std::span<const GustTestRecord> records) {
  std::string out = "condition\ttaps\tcontroller\tdeflection_deg\trepetition\tsettled_grp\trise_time_s\n";
  for (const auto& r : records) {
    out += std::string(to_string(r.condition)) + '\t' + std::to_string(static_cast<int>(r.taps)) + '\t' +
           r.controller_id + '\t' + format_double(r.deflection_deg) + '\t' + std::to_string(r.repetition) + '\t' +
           format_double(r.settled_grp) + '\t' + optional_cell(r.rise_time_s) + '\n';
  }
  return out;
}

std::string reward_curve_table(std::span<const double> rewards, std::span<const double> running_average) {
  if (rewards.size() != running_average.size())
    throw std::invalid_argument("reward curve: reward and running-average lengths differ");
  std::string out = "episode\ttotal_reward\trunning_average\n";
  for (std::size_t i = 0; i < rewards.size(); ++i)
    out += std::to_string(i) + '\t' + format_double(rewards[i]) + '\t' + format_double(running_average[i]) + '\n';
  return out;
}

}  // namespace gustrl
