#include "gustrl/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <mutex>
#include <thread>

#include "gustrl/error.hpp"
#include "gustrl/policy_file.hpp"
#include "gustrl/seed.hpp"

namespace gustrl {

namespace fs = std::filesystem;

std::string_view to_string(CampaignPreset preset) { return preset == CampaignPreset::Desk ? "desk" : "full"; }

CampaignPreset parse_campaign_preset(std::string_view text) {
  if (text == "desk") return CampaignPreset::Desk;
  if (text == "full") return CampaignPreset::Full;
  throw ConfigError("preset: expected desk or full, got '" + std::string(text) + "'");
}

CampaignPlan campaign_preset(CampaignPreset preset) {
  CampaignPlan plan;
  plan.preset = std::string(to_string(preset));
  if (preset == CampaignPreset::Desk) {
    plan.conditions = {FlightCondition::HighLift};
    plan.controllers = {{FlightCondition::HighLift, 2}};
    plan.repetitions = 3;
    plan.episodes = 200;
  } else {
    plan.conditions = {FlightCondition::HighLift, FlightCondition::MedLift, FlightCondition::LowLift};
    plan.controllers = {{FlightCondition::HighLift, 10}, {FlightCondition::MedLift, 5}, {FlightCondition::LowLift, 5}};
    plan.repetitions = 10;
    plan.episodes = 1000;
  }
  return plan;
}

void CampaignPlan::validate() const {
  std::vector<std::string> problems;
  if (conditions.empty()) problems.emplace_back("campaign: no flight conditions");
  if (taps.empty()) problems.emplace_back("campaign: no tap configurations");
  for (auto c : conditions) {
    const auto it = controllers.find(c);
    if (it == controllers.end() || it->second < 1)
      problems.push_back("campaign: controller count for " + std::string(to_string(c)) + " must be >= 1");
  }
  if (repetitions < 1) problems.emplace_back("campaign: repetitions must be >= 1");
  if (episodes && *episodes < 0) problems.emplace_back("campaign: episodes must be >= 0");
  if (bootstrap_resamples < 1) problems.emplace_back("campaign: bootstrap resamples must be >= 1");
  if (!problems.empty()) throw ConfigError(problems);
}

nlohmann::json plan_to_json(const CampaignPlan& plan) {
  nlohmann::json doc;
  doc["preset"] = plan.preset;
  doc["conditions"] = nlohmann::json::array();
  for (auto c : plan.conditions) doc["conditions"].push_back(std::string(to_string(c)));
  doc["taps"] = nlohmann::json::array();
  for (auto t : plan.taps) doc["taps"].push_back(static_cast<int>(t));
  doc["controllers"] = nlohmann::json::object();
  for (const auto& [c, n] : plan.controllers) doc["controllers"][std::string(to_string(c))] = n;
  doc["repetitions"] = plan.repetitions;
  doc["episodes"] = plan.episodes ? nlohmann::json(*plan.episodes) : nlohmann::json(nullptr);
  doc["bootstrap_resamples"] = plan.bootstrap_resamples;
  doc["master_seed"] = plan.master_seed;
  return doc;
}

CampaignPlan plan_from_json(const nlohmann::json& doc) {
  CampaignPlan plan;
  plan.preset = doc.at("preset").get<std::string>();
  plan.conditions.clear();
  for (const auto& c : doc.at("conditions")) plan.conditions.push_back(parse_flight_condition(c.get<std::string>()));
  plan.taps.clear();
  for (const auto& t : doc.at("taps")) plan.taps.push_back(tap_config_from_count(t.get<int>()));
  for (const auto& [name, n] : doc.at("controllers").items()) plan.controllers[parse_flight_condition(name)] = n.get<int>();
  plan.repetitions = doc.at("repetitions").get<int>();
  if (!doc.at("episodes").is_null()) plan.episodes = doc.at("episodes").get<int>();
  plan.bootstrap_resamples = doc.at("bootstrap_resamples").get<int>();
  plan.master_seed = doc.at("master_seed").get<std::uint64_t>();
  return plan;
}

std::string MatrixEntry::controller_id() const { return "c" + std::to_string(controller); }

std::string MatrixEntry::key() const {
  return record_key(condition, taps, controller_id(), deflection_deg, repetition);
}

std::vector<MatrixEntry> enumerate_matrix(const CampaignPlan& plan) {
  plan.validate();
  std::vector<MatrixEntry> out;
  for (auto condition : plan.conditions) {
    const auto flight = builtin_flight_condition(condition);
    for (auto taps : plan.taps)
      for (int c = 0; c < plan.controllers.at(condition); ++c)
        for (double deflection : flight.testing_deflections_deg)
          for (int r = 0; r < plan.repetitions; ++r) out.push_back({condition, taps, c, deflection, r});
  }
  return out;
}

std::uint64_t training_seed(std::uint64_t master, FlightCondition condition, TapConfig taps, int controller) {
  const auto label = "train/" + std::string(to_string(condition)) + "/t" + std::to_string(static_cast<int>(taps));
  return derive_seed(master, label, static_cast<std::uint64_t>(controller));
}

std::uint64_t test_seed(std::uint64_t master, const std::string& record_key) {
  return derive_seed(master, "test/" + record_key);
}

std::uint64_t baseline_seed(std::uint64_t master, FlightCondition condition, double deflection_deg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f", deflection_deg);
  return derive_seed(master, "baseline/" + std::string(to_string(condition)) + "/" + buf);
}

std::map<double, BaselineTrace> compute_baselines(const RunConfig& cfg, std::uint64_t master) {
  std::map<double, BaselineTrace> out;
  for (double d : cfg.plant.flight.testing_deflections_deg)
    out.emplace(d, compute_baseline(cfg, d, baseline_seed(master, cfg.plant.flight.name, d)));
  return out;
}

std::vector<GustTestRecord> evaluate_policy(const Network& actor, const RunConfig& cfg, const std::string& controller_id,
                                            int repetitions, const std::vector<double>& deflections,
                                            std::uint64_t master, const std::map<double, BaselineTrace>& baselines) {
  if (actor.spec() != cfg.actor_spec())
    throw SpecMismatchError("policy expects " + std::to_string(actor.spec().input_channels) +
                            " input channels and " + std::to_string(actor.spec().outputs) +
                            " actions; the configuration needs " + std::to_string(cfg.actor_spec().input_channels) +
                            " channels and " + std::to_string(cfg.actor_spec().outputs) + " actions");
  GreedyPolicy policy(actor);
  std::vector<GustTestRecord> out;
  for (double d : deflections)
    for (int r = 0; r < repetitions; ++r) {
      GustTestSpec spec{controller_id, d, r,
                        test_seed(master, record_key(cfg.plant.flight.name, cfg.plant.taps, controller_id, d, r))};
      out.push_back(run_gust_test(policy, cfg, spec, baselines.at(d)));
    }
  return out;
}

std::vector<fs::path> write_summaries(const fs::path& out_dir, std::span<const GustTestRecord> records, int resamples,
                                      std::uint64_t master, std::vector<std::string>& warnings) {
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_file_atomic(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  const auto cells = summarize(records);
  emit("summary.tsv", summary_table(cells));
  emit("consistency.tsv", consistency_table(records));
  emit("distribution.tsv", distribution_table(records));

  std::vector<TapComparison> comparisons;
  for (auto metric : {ComparisonMetric::SettledGrp, ComparisonMetric::Consistency, ComparisonMetric::RiseTime}) {
    try {
      const auto rows = compare_tap_configs(records, metric, resamples,
                                            derive_seed(master, "bootstrap/" + std::string(to_string(metric))));
      comparisons.insert(comparisons.end(), rows.begin(), rows.end());
    } catch (const std::invalid_argument& e) {
      warnings.push_back(std::string("significance (") + std::string(to_string(metric)) + ") skipped: " + e.what());
    }
  }
  emit("significance.tsv", significance_table(comparisons));
  return written;
}

namespace {

struct Job {
  FlightCondition condition;
  TapConfig taps;
  int controller;
  std::vector<MatrixEntry> tests;
};

struct JobResult {
  std::vector<GustTestRecord> records;
  std::vector<std::string> failures;
  std::vector<std::string> log;
  std::vector<fs::path> artifacts;
};

std::string cell_name(FlightCondition condition, TapConfig taps) {
  return std::string(to_string(condition)) + "-t" + std::to_string(static_cast<int>(taps));
}

}  // namespace

CampaignOutcome run_ablation_campaign(const CampaignPlan& plan, const CampaignOptions& options) {
  const auto matrix = enumerate_matrix(plan);
  CampaignOutcome outcome;
  outcome.expected_records = matrix.size();
  auto say = [&](const std::string& line) {
    if (options.log) options.log(line);
  };

  std::map<std::pair<FlightCondition, TapConfig>, RunConfig> configs;
  for (auto condition : plan.conditions)
    for (auto taps : plan.taps) {
      auto cfg = resolve_run_config(condition, taps, options.config_doc, options.overrides);
      if (plan.episodes) cfg.training.episodes = *plan.episodes;
      cfg.validate();
      outcome.configs[cell_name(condition, taps)] = to_json(cfg);
      configs.emplace(std::pair{condition, taps}, std::move(cfg));
    }

  fs::create_directories(options.out_dir / "policies");
  fs::create_directories(options.out_dir / "curves");
  fs::create_directories(options.out_dir / "baselines");

  // Resuming into a directory that holds a different campaign would silently mix results.
  const auto identity_path = options.out_dir / "campaign.json";
  nlohmann::json identity{{"plan", plan_to_json(plan)}, {"configs", outcome.configs}};
  if (fs::exists(identity_path)) {
    if (load_json_file(identity_path) != identity)
      throw ConfigError("campaign: " + options.out_dir.string() +
                        " holds a campaign with a different plan or configuration");
  } else {
    write_file_atomic(identity_path, identity.dump(2) + "\n");
  }

  ResultsStore store(options.out_dir);
  const std::size_t before = store.size();

  std::map<FlightCondition, std::map<double, BaselineTrace>> baselines;
  for (auto condition : plan.conditions) {
    const auto& cfg = configs.at({condition, plan.taps.front()});
    baselines[condition] = compute_baselines(cfg, plan.master_seed);
    for (const auto& [d, b] : baselines[condition]) {
      std::string text = "# condition=" + std::string(to_string(condition)) + " deflection_deg=" + format_double(d) +
                         " seed=" + std::to_string(baseline_seed(plan.master_seed, condition, d)) + "\nstep\tlift_n\n";
      for (std::size_t i = 0; i < b.lift_n.size(); ++i) text += std::to_string(i) + '\t' + format_double(b.lift_n[i]) + '\n';
      char name[64];
      std::snprintf(name, sizeof name, "%s_%+.2f.tsv", std::string(to_string(condition)).c_str(), d);
      write_file_atomic(options.out_dir / "baselines" / name, text);
    }
  }

  std::vector<Job> jobs;
  for (const auto& entry : matrix) {
    if (jobs.empty() || jobs.back().condition != entry.condition || jobs.back().taps != entry.taps ||
        jobs.back().controller != entry.controller)
      jobs.push_back({entry.condition, entry.taps, entry.controller, {}});
    if (!store.contains(entry.key())) jobs.back().tests.push_back(entry);
  }
  for (const auto& job : jobs)
    outcome.seeds["train/" + cell_name(job.condition, job.taps) + "/c" + std::to_string(job.controller)] =
        training_seed(plan.master_seed, job.condition, job.taps, job.controller);

  auto run_job = [&](const Job& job) {
    JobResult result;
    const auto& cfg = configs.at({job.condition, job.taps});
    const std::string id = "c" + std::to_string(job.controller);
    const std::string stem = cell_name(job.condition, job.taps) + "-" + id;
    const auto policy_path = options.out_dir / "policies" / (stem + ".grlp");
    const auto curve_path = options.out_dir / "curves" / (stem + ".tsv");
    result.artifacts = {policy_path, curve_path};
    if (job.tests.empty()) return result;

    const auto hash = config_hash(cfg);
    std::optional<Network> actor;
    try {
      if (fs::exists(policy_path)) {
        auto archive = load_networks(read_file_bytes(policy_path));
        if (archive.config_hash == hash && !archive.networks.empty() &&
            archive.networks.front().network.spec() == cfg.actor_spec()) {
          actor = std::move(archive.networks.front().network);
          result.log.push_back(stem + ": reusing trained policy");
        }
      }
      if (!actor) {
        auto trained = run_training(cfg, training_seed(plan.master_seed, job.condition, job.taps, job.controller));
        NetworkArchive archive;
        archive.config_hash = hash;
        archive.networks.push_back({trained.agent.actor(), trained.agent.actor_optimizer()});
        archive.networks.push_back({trained.agent.critic(), trained.agent.critic_optimizer()});
        write_file_atomic(curve_path, reward_curve_table(trained.episode_rewards, trained.running_average));
        write_file_atomic(policy_path, save_networks(archive));
        actor = trained.agent.actor();
        const auto n = trained.episode_rewards.size();
        result.log.push_back(stem + ": trained " + std::to_string(n) + " episodes" +
                             (n ? ", final running average " + format_double(trained.running_average.back()) : ""));
      }
    } catch (const std::exception& e) {
      result.failures.push_back(stem + ": training failed: " + e.what());
      return result;
    }

    GreedyPolicy policy(*actor);
    for (const auto& entry : job.tests) {
      try {
        GustTestSpec spec{id, entry.deflection_deg, entry.repetition, test_seed(plan.master_seed, entry.key())};
        result.records.push_back(run_gust_test(policy, cfg, spec, baselines.at(job.condition).at(entry.deflection_deg)));
      } catch (const std::exception& e) {
        result.failures.push_back(entry.key() + ": test failed: " + e.what());
      }
    }
    return result;
  };

  // Workers pull jobs in order; results are committed strictly in job order so the
  // record file is identical for any worker count.
  std::vector<std::optional<JobResult>> results(jobs.size());
  std::mutex mutex;
  std::size_t cursor = 0;
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  auto commit_ready = [&] {
    while (cursor < results.size() && results[cursor]) {
      auto& r = *results[cursor];
      for (const auto& rec : r.records)
        if (store.append(rec)) ++outcome.new_records;
      for (auto& line : r.log) say(line);
      for (auto& line : r.failures) {
        say(line);
        outcome.failures.push_back(line);
      }
      for (auto& p : r.artifacts)
        if (fs::exists(p)) outcome.artifacts.push_back(p);
      results[cursor].reset();
      ++cursor;
    }
  };
  auto worker = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        auto r = run_job(jobs[i]);
        std::lock_guard lock(mutex);
        results[i] = std::move(r);
        commit_ready();
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!fatal) fatal = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  outcome.stored_records = store.size();
  outcome.reused_records = before;
  const auto records = store.load();
  const auto tables = write_summaries(options.out_dir, records, plan.bootstrap_resamples, plan.master_seed,
                                      outcome.warnings);
  outcome.artifacts.push_back(store.records_path());
  outcome.artifacts.insert(outcome.artifacts.end(), tables.begin(), tables.end());
  return outcome;
}

}  // namespace gustrl
