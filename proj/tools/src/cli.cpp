#include "gustrl/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gustrl/campaign.hpp"
#include "gustrl/error.hpp"
#include "gustrl/policy_file.hpp"
#include "gustrl/seed.hpp"
#include "gustrl/store.hpp"

#ifndef GUSTRL_VERSION
#define GUSTRL_VERSION "0.0.0"
#endif

namespace gustrl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string version() { return GUSTRL_VERSION; }

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

/// Partial campaigns are reported through the exit code, not an exception.
struct RunResult {
  int code = kSuccess;
  json seeds = json::object();
  std::vector<fs::path> artifacts;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  fs::path out_dir;
  int workers = 1;
};

void write_manifest(const Context& ctx, const std::string& command, const json& invocation, const RunResult& r,
                    const std::string& started) {
  json artifacts = json::array();
  for (const auto& p : r.artifacts) artifacts.push_back(fs::relative(p, ctx.out_dir).generic_string());
  json manifest{
      {"tool", "gustrl"},
      {"version", version()},
      {"command", command},
      {"invocation", invocation},
      {"master_seed", invocation.value("seed", json(nullptr))},
      {"seeds", r.seeds},
      {"artifacts", artifacts},
      {"status", r.code == kSuccess ? "complete" : "partial"},
      {"failures", r.failures},
      {"warnings", r.warnings},
      {"started_at", started},
      {"finished_at", utc_now()},
  };
  write_file_atomic(ctx.out_dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---- command bodies: everything they need comes from the invocation document ----

RunResult exec_train(const json& inv, const Context& ctx) {
  const auto cfg = run_config_from_json(inv.at("config"));
  cfg.validate();
  const auto seed = inv.at("seed").get<std::uint64_t>();
  const int every = std::max(1, cfg.training.episodes / 20);
  auto trained = run_training(cfg, seed, [&](const EpisodeLog& e) {
    if ((e.episode + 1) % every == 0)
      ctx.err << "episode " << e.episode + 1 << "/" << cfg.training.episodes << " reward " << e.total_reward
              << " running average " << e.running_average << "\n";
  });

  RunResult r;
  for (const char* label : {"agent", "plant", "gusts", "actions"}) r.seeds[label] = derive_seed(seed, label);
  NetworkArchive archive;
  archive.config_hash = config_hash(cfg);
  archive.networks.push_back({trained.agent.actor(), trained.agent.actor_optimizer()});
  archive.networks.push_back({trained.agent.critic(), trained.agent.critic_optimizer()});
  const auto policy = ctx.out_dir / "policy.grlp";
  const auto curve = ctx.out_dir / "reward_curve.tsv";
  write_file_atomic(policy, save_networks(archive));
  write_file_atomic(curve, reward_curve_table(trained.episode_rewards, trained.running_average));
  r.artifacts = {policy, curve};
  ctx.out << "trained " << cfg.training.episodes << " episodes; policy " << policy.string() << "\n";
  return r;
}

RunResult exec_eval(const json& inv, const Context& ctx) {
  const auto cfg = run_config_from_json(inv.at("config"));
  cfg.validate();
  const auto seed = inv.at("seed").get<std::uint64_t>();
  const fs::path policy_path = inv.at("policy").get<std::string>();
  if (!fs::exists(policy_path)) throw std::runtime_error("policy file not found: " + policy_path.string());
  const auto bytes = read_file_bytes(policy_path);
  auto archive = load_networks(bytes);
  if (archive.networks.empty()) throw PolicyFormatError("policy file holds no networks: " + policy_path.string());

  const auto deflections = inv.at("deflections").get<std::vector<double>>();
  const auto reps = inv.at("repetitions").get<int>();
  const auto id = inv.at("controller_id").get<std::string>();
  const auto baselines = compute_baselines(cfg, seed);
  const auto records = evaluate_policy(archive.networks.front().network, cfg, id, reps, deflections, seed, baselines);

  RunResult r;
  ResultsStore store(ctx.out_dir);
  for (const auto& rec : records) {
    store.append(rec);
    r.seeds["test/" + rec.key()] = rec.seed;
  }
  for (const auto& [d, b] : baselines) r.seeds["baseline/" + format_double(d)] = baseline_seed(seed, cfg.plant.flight.name, d);
  const auto all = store.load();
  const auto tables = write_summaries(ctx.out_dir, all, inv.at("resamples").get<int>(), seed, r.warnings);
  r.artifacts.push_back(store.records_path());
  r.artifacts.insert(r.artifacts.end(), tables.begin(), tables.end());

  double sum = 0.0;
  for (const auto& rec : records) sum += rec.settled_grp;
  ctx.out << records.size() << " records; mean settled GRP " << (records.empty() ? 0.0 : sum / records.size())
          << "%\n";
  return r;
}

RunResult exec_campaign(const json& inv, const Context& ctx) {
  const auto plan = plan_from_json(inv.at("plan"));
  CampaignOptions options;
  options.out_dir = ctx.out_dir;
  options.config_doc = inv.at("config_doc");
  options.overrides = inv.at("overrides").get<std::vector<std::string>>();
  options.workers = ctx.workers;
  options.log = [&](const std::string& line) { ctx.err << line << "\n"; };
  const auto outcome = run_ablation_campaign(plan, options);

  RunResult r;
  r.seeds = outcome.seeds;
  r.artifacts = outcome.artifacts;
  r.failures = outcome.failures;
  r.warnings = outcome.warnings;
  r.code = outcome.complete() ? kSuccess : kPartial;
  ctx.out << outcome.stored_records << "/" << outcome.expected_records << " records (" << outcome.new_records
          << " new, " << outcome.reused_records << " already stored, " << outcome.failures.size() << " failures)\n";
  return r;
}

RunResult exec_baseline(const json& inv, const Context& ctx) {
  auto cfg = run_config_from_json(inv.at("config"));
  cfg.validate();
  if (inv.at("noiseless").get<bool>()) cfg.plant = cfg.plant.noiseless();
  const auto seed = inv.at("seed").get<std::uint64_t>();
  RunResult r;
  for (double d : inv.at("deflections").get<std::vector<double>>()) {
    const auto s = baseline_seed(seed, cfg.plant.flight.name, d);
    const auto b = compute_baseline(cfg, d, s);
    std::string text = "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(s) +
                       " deflection_deg=" + format_double(d) + "\nstep\tlift_n\tdelta_lift_n\n";
    for (std::size_t i = 0; i < b.lift_n.size(); ++i)
      text += std::to_string(i) + '\t' + format_double(b.lift_n[i]) + '\t' +
              format_double(b.lift_n[i] - cfg.plant.flight.baseline_lift_n) + '\n';
    char name[64];
    std::snprintf(name, sizeof name, "baseline_%+.2f.tsv", d);
    const auto path = ctx.out_dir / name;
    write_file_atomic(path, text);
    r.artifacts.push_back(path);
    r.seeds["baseline/" + format_double(d)] = s;
    ctx.out << "deflection " << format_double(d) << " deg: mean baseline lift change " << format_double(b.mean_delta_n)
            << " N\n";
  }
  return r;
}

RunResult exec_metrics(const json& inv, const Context& ctx) {
  const fs::path records_dir = inv.at("records").get<std::string>();
  if (!fs::exists(records_dir / "records.jsonl"))
    throw std::runtime_error("no records.jsonl in " + records_dir.string());
  const auto records = ResultsStore(records_dir).load();
  RunResult r;
  r.artifacts = write_summaries(ctx.out_dir, records, inv.at("resamples").get<int>(),
                                inv.at("seed").get<std::uint64_t>(), r.warnings);
  ctx.out << "summarized " << records.size() << " records\n";
  return r;
}

RunResult dispatch(const std::string& command, const json& inv, const Context& ctx) {
  if (command == "train") return exec_train(inv, ctx);
  if (command == "eval") return exec_eval(inv, ctx);
  if (command == "campaign") return exec_campaign(inv, ctx);
  if (command == "baseline") return exec_baseline(inv, ctx);
  if (command == "metrics") return exec_metrics(inv, ctx);
  throw ConfigError("unknown command '" + command + "'");
}

// ---- option parsing: turns flags into an invocation document ----

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = kDefaultMasterSeed;
  std::string out;
  int workers = 1;
};

struct RunOptions {
  std::string condition = "high-lift";
  int taps = 6;
};

void add_common(CLI::App* app, CommonOptions& c, bool with_config = true) {
  if (with_config) {
    app->add_option("--config", c.config, "JSON configuration file");
    app->add_option("--set", c.sets, "Override one setting, e.g. ppo.learning_rate=1e-4");
  }
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--out", c.out, "Output directory (default: $GUSTRL_OUT/<command>)");
}

void add_run(CLI::App* app, RunOptions& r) {
  app->add_option("--condition", r.condition, "high-lift, med-lift or low-lift");
  app->add_option("--taps", r.taps, "Active pressure taps: 1, 3 or 6");
}

RunConfig resolve(const CommonOptions& c, const RunOptions& r, std::vector<std::string> extra = {}) {
  std::vector<std::string> problems;
  std::optional<FlightCondition> condition;
  std::optional<TapConfig> taps;
  try {
    condition = parse_flight_condition(r.condition);
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  try {
    taps = tap_config_from_count(r.taps);
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!problems.empty()) throw ConfigError(problems);
  const json doc = c.config.empty() ? json::object() : load_json_file(c.config);
  auto overrides = c.sets;
  overrides.insert(overrides.end(), extra.begin(), extra.end());
  return resolve_run_config(condition, taps, doc, overrides);
}

std::vector<double> parse_deflections(const std::string& text, const FlightConditionConfig& flight) {
  if (text == "all") return flight.testing_deflections_deg;
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("deflection list: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw ConfigError("deflection list is empty");
  return out;
}

fs::path default_out(const std::string& command) {
  const char* root = std::getenv(kOutputEnv);
  return fs::path(root && *root ? root : "gustrl-out") / command;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gust-rejection controllers for a camber-morphing wing surrogate", "gustrl"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  CommonOptions common;
  RunOptions run_opts;
  std::string from_manifest;
  int episodes = -1;

  auto* train = app.add_subcommand("train", "Train one controller");
  add_common(train, common);
  add_run(train, run_opts);
  train->add_option("--episodes", episodes, "Training episodes");

  std::string policy;
  std::string conditions = "all";
  int reps = 3;
  std::string controller_id = "c0";
  int resamples = kDefaultBootstrapResamples;
  auto* eval = app.add_subcommand("eval", "Run gust tests of a trained policy");
  add_common(eval, common);
  add_run(eval, run_opts);
  eval->add_option("--policy", policy, "Policy file written by train");
  eval->add_option("--reps", reps, "Repetitions per gust condition")->check(CLI::PositiveNumber);
  eval->add_option("--conditions", conditions, "'all' or comma-separated testing deflections in degrees");
  eval->add_option("--controller-id", controller_id, "Identifier stored in each record");
  eval->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);

  std::string preset = "desk";
  int controllers = -1;
  std::vector<std::string> campaign_conditions;
  std::vector<int> campaign_taps;
  bool dry_run = false;
  auto* campaign = app.add_subcommand("campaign", "Train and test the full tap ablation");
  add_common(campaign, common);
  campaign->add_option("--preset", preset, "desk or full");
  campaign->add_option("--controllers", controllers, "Controllers per cell (all conditions)");
  campaign->add_option("--reps", reps, "Repetitions per gust condition");
  campaign->add_option("--episodes", episodes, "Training episodes per controller");
  campaign->add_option("--flight-conditions", campaign_conditions, "Subset of flight conditions (comma-separated)")->delimiter(',');
  campaign->add_option("--tap-configs", campaign_taps, "Subset of tap configurations (comma-separated)")->delimiter(',');
  campaign->add_option("--resamples", resamples, "Bootstrap resamples");
  campaign->add_flag("--dry-run", dry_run, "Print the matrix size and exit");

  std::string deflections = "all";
  bool noiseless = false;
  auto* baseline = app.add_subcommand("baseline", "Write unactuated lift traces");
  add_common(baseline, common);
  add_run(baseline, run_opts);
  baseline->add_option("--deflections", deflections, "'all' or comma-separated deflections in degrees");
  baseline->add_flag("--noiseless", noiseless, "Disable sensor and lift noise");

  std::string records_dir;
  auto* metrics = app.add_subcommand("metrics", "Recompute summary and significance tables from stored records");
  add_common(metrics, common, false);
  metrics->add_option("--records", records_dir, "Directory holding records.jsonl (required unless --from-manifest)");
  metrics->add_option("--resamples", resamples, "Bootstrap resamples")->check(CLI::PositiveNumber);

  for (auto* sub : {train, eval, campaign, baseline, metrics}) {
    sub->add_option("--from-manifest", from_manifest, "Re-run the command recorded in a manifest");
    sub->add_option("--workers", common.workers, "Parallel workers")->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kValidation;
  }

  auto* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    json invocation;
    if (!from_manifest.empty()) {
      const auto manifest = load_json_file(from_manifest);
      if (manifest.at("command").get<std::string>() != command)
        throw ConfigError("manifest " + from_manifest + " records a '" + manifest.at("command").get<std::string>() +
                          "' run, not '" + command + "'");
      invocation = manifest.at("invocation");
    } else if (command == "train") {
      auto cfg = resolve(common, run_opts,
                         episodes >= 0 ? std::vector<std::string>{"training.episodes=" + std::to_string(episodes)}
                                       : std::vector<std::string>{});
      invocation = {{"config", to_json(cfg)}, {"seed", common.seed}};
    } else if (command == "eval") {
      if (policy.empty()) throw ConfigError("eval: --policy is required");
      const auto cfg = resolve(common, run_opts);
      invocation = {{"config", to_json(cfg)},
                    {"seed", common.seed},
                    {"policy", fs::absolute(policy).string()},
                    {"repetitions", reps},
                    {"deflections", parse_deflections(conditions, cfg.plant.flight)},
                    {"controller_id", controller_id},
                    {"resamples", resamples}};
    } else if (command == "campaign") {
      auto plan = campaign_preset(parse_campaign_preset(preset));
      plan.master_seed = common.seed;
      plan.bootstrap_resamples = resamples;
      if (controllers > 0)
        for (auto& [c, n] : plan.controllers) n = controllers;
      if (chosen->count("--reps")) plan.repetitions = reps;
      if (episodes >= 0) plan.episodes = episodes;
      if (!campaign_conditions.empty()) {
        plan.conditions.clear();
        for (const auto& name : campaign_conditions) {
          const auto c = parse_flight_condition(name);
          plan.conditions.push_back(c);
          if (!plan.controllers.contains(c)) plan.controllers[c] = controllers > 0 ? controllers : 2;
        }
      }
      if (!campaign_taps.empty()) {
        plan.taps.clear();
        for (int t : campaign_taps) plan.taps.push_back(tap_config_from_count(t));
      }
      plan.validate();
      if (dry_run) {
        const auto matrix = enumerate_matrix(plan);
        std::size_t trained = 0;
        for (auto c : plan.conditions) trained += static_cast<std::size_t>(plan.controllers.at(c)) * plan.taps.size();
        out << "preset " << plan.preset << ": " << trained << " controllers, " << matrix.size() << " records\n";
        return kSuccess;
      }
      invocation = {{"plan", plan_to_json(plan)},
                    {"seed", plan.master_seed},
                    {"config_doc", common.config.empty() ? json::object() : load_json_file(common.config)},
                    {"overrides", common.sets}};
    } else if (command == "baseline") {
      const auto cfg = resolve(common, run_opts);
      invocation = {{"config", to_json(cfg)},
                    {"seed", common.seed},
                    {"deflections", parse_deflections(deflections, cfg.plant.flight)},
                    {"noiseless", noiseless}};
    } else {
      if (records_dir.empty()) throw ConfigError("metrics: --records is required");
      invocation = {{"records", fs::absolute(records_dir).string()}, {"seed", common.seed}, {"resamples", resamples}};
    }

    Context ctx{out, err, common.out.empty() ? default_out(command) : fs::path(common.out), common.workers};
    fs::create_directories(ctx.out_dir);
    ctx.out_dir = fs::absolute(ctx.out_dir);
    const auto started = utc_now();
    const auto result = dispatch(command, invocation, ctx);
    write_manifest(ctx, command, invocation, result, started);
    for (const auto& w : result.warnings) err << "warning: " << w << "\n";
    for (const auto& f : result.failures) err << "failed: " << f << "\n";
    return result.code;
  } catch (const ConfigError& e) {
    for (const auto& p : e.problems()) err << "invalid configuration: " << p << "\n";
    return kValidation;
  } catch (const SpecMismatchError& e) {
    err << "policy does not match the configuration: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    err << "malformed JSON input: " << e.what() << "\n";
    return kValidation;
  } catch (const fs::filesystem_error& e) {
    err << "file system error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

}  // namespace gustrl::cli
