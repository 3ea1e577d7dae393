#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gustrl/cli.hpp"

namespace fs = std::filesystem;
using gustrl::cli::run;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root = fs::temp_directory_path() /
           ("gustrl-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root);
  }
  void TearDown() override { fs::remove_all(root); }
  std::string dir(const std::string& name) const { return (root / name).string(); }

  // Small network and few episodes so each command takes milliseconds.
  std::vector<std::string> tiny(std::vector<std::string> args) const {
    for (const char* s : {"network.filters=2", "network.hidden=8"}) {
      args.push_back("--set");
      args.push_back(s);
    }
    return args;
  }

  fs::path root;
};

}  // namespace

TEST_F(Cli, VersionAndHelp) {
  const auto v = call({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(gustrl::cli::version()), std::string::npos);
  EXPECT_EQ(call({"train", "--help"}).code, 0);
  EXPECT_EQ(call({"frobnicate"}).code, gustrl::cli::kValidation);
}

TEST_F(Cli, TrainWritesPolicyCurveAndManifest) {
  const auto r = call(tiny({"train", "--condition", "low-lift", "--taps", "1", "--episodes", "2", "--seed", "3",
                            "--out", dir("train")}));
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"policy.grlp", "reward_curve.tsv", "manifest.json"}) EXPECT_TRUE(fs::exists(root / "train" / f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(root / "train" / "manifest.json"));
  EXPECT_EQ(manifest.at("command"), "train");
  EXPECT_EQ(manifest.at("status"), "complete");
  EXPECT_EQ(manifest.at("master_seed"), 3);
  // header plus one row per episode
  const auto curve = slurp(root / "train" / "reward_curve.tsv");
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);
}

TEST_F(Cli, ValidationErrorsExitTwo) {
  EXPECT_EQ(call({"train", "--taps", "2", "--out", dir("a")}).code, gustrl::cli::kValidation);
  const auto bad = call({"train", "--set", "ppo.gamma=7", "--set", "nope.x=1", "--out", dir("b")});
  EXPECT_EQ(bad.code, gustrl::cli::kValidation);
  EXPECT_NE(bad.err.find("gamma"), std::string::npos);
  EXPECT_NE(bad.err.find("nope"), std::string::npos);
  EXPECT_EQ(call({"eval", "--out", dir("c")}).code, gustrl::cli::kValidation);
}

TEST_F(Cli, MissingPolicyIsRuntimeError) {
  const auto r = call({"eval", "--policy", dir("nothing.grlp"), "--out", dir("eval")});
  EXPECT_EQ(r.code, gustrl::cli::kRuntime);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, PolicyForOtherTapCountIsRejected) {
  ASSERT_EQ(call(tiny({"train", "--condition", "med-lift", "--taps", "6", "--episodes", "1", "--out", dir("t")})).code,
            0);
  const auto r = call(tiny({"eval", "--condition", "med-lift", "--taps", "3", "--policy", dir("t/policy.grlp"),
                            "--out", dir("e")}));
  EXPECT_EQ(r.code, gustrl::cli::kValidation);
  EXPECT_NE(r.err.find("7 input channels"), std::string::npos) << r.err;
}

TEST_F(Cli, EvalRerunFromManifestIsByteIdentical) {
  ASSERT_EQ(call(tiny({"train", "--condition", "med-lift", "--taps", "3", "--episodes", "2", "--out", dir("t")})).code,
            0);
  const auto first = call(tiny({"eval", "--condition", "med-lift", "--taps", "3", "--policy", dir("t/policy.grlp"),
                                "--reps", "1", "--resamples", "50", "--out", dir("e1")}));
  ASSERT_EQ(first.code, 0) << first.err;
  const auto again = call({"eval", "--from-manifest", dir("e1/manifest.json"), "--out", dir("e2")});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(slurp(root / "e1" / "records.jsonl"), slurp(root / "e2" / "records.jsonl"));
  EXPECT_EQ(slurp(root / "e1" / "summary.tsv"), slurp(root / "e2" / "summary.tsv"));
  const auto records = slurp(root / "e1" / "records.jsonl");
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 6);

  EXPECT_EQ(call({"train", "--from-manifest", dir("e1/manifest.json"), "--out", dir("x")}).code,
            gustrl::cli::kValidation);
}

TEST_F(Cli, TrainRerunFromManifestIsByteIdentical) {
  ASSERT_EQ(call(tiny({"train", "--condition", "high-lift", "--taps", "1", "--episodes", "2", "--out", dir("a")})).code,
            0);
  ASSERT_EQ(call({"train", "--from-manifest", dir("a/manifest.json"), "--out", dir("b")}).code, 0);
  EXPECT_EQ(slurp(root / "a" / "policy.grlp"), slurp(root / "b" / "policy.grlp"));
  EXPECT_EQ(slurp(root / "a" / "reward_curve.tsv"), slurp(root / "b" / "reward_curve.tsv"));
}

TEST_F(Cli, BaselineAndMetrics) {
  const auto b = call({"baseline", "--condition", "high-lift", "--deflections", "12.5", "--noiseless", "--out",
                       dir("base")});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_TRUE(fs::exists(root / "base" / "baseline_+12.50.tsv"));

  EXPECT_EQ(call({"metrics", "--records", dir("nowhere"), "--out", dir("m")}).code, gustrl::cli::kRuntime);
}

TEST_F(Cli, CampaignDryRunCounts) {
  const auto full = call({"campaign", "--preset", "full", "--dry-run"});
  EXPECT_EQ(full.code, 0);
  EXPECT_NE(full.out.find("60 controllers, 3600 records"), std::string::npos) << full.out;
  const auto desk = call({"campaign", "--preset", "desk", "--dry-run"});
  EXPECT_NE(desk.out.find("6 controllers, 108 records"), std::string::npos) << desk.out;
}

TEST_F(Cli, TinyCampaignThenMetrics) {
  const auto c = call(tiny({"campaign", "--preset", "desk", "--controllers", "2", "--reps", "1", "--episodes", "1",
                            "--flight-conditions", "low-lift", "--tap-configs", "1,6", "--resamples", "50", "--out",
                            dir("camp")}));
  ASSERT_EQ(c.code, 0) << c.err;
  for (const char* f : {"records.jsonl", "summary.tsv", "significance.tsv", "consistency.tsv", "manifest.json"})
    EXPECT_TRUE(fs::exists(root / "camp" / f)) << f;
  const auto m = call({"metrics", "--records", dir("camp"), "--resamples", "50", "--out", dir("m")});
  ASSERT_EQ(m.code, 0) << m.err;
  EXPECT_EQ(slurp(root / "camp" / "summary.tsv"), slurp(root / "m" / "summary.tsv"));
}
