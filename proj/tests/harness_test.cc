// Copyright 2026 The adalab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adalab/harness.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "adalab/attack.h"
#include "adalab/mechanisms.h"

namespace adalab {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using ::testing::Pair;
using json = nlohmann::json;

ExperimentConfig Config(ExperimentKind kind, const ConfigMap& values) {
  return ExperimentConfig::FromMap(kind, values);
}

std::string Slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Sets ADALAB_THREADS for the lifetime of the object.
class ScopedThreads {
 public:
  explicit ScopedThreads(const char* value) {
    if (const char* old = std::getenv("ADALAB_THREADS")) old_ = old;
    setenv("ADALAB_THREADS", value, 1);
  }
  ~ScopedThreads() {
    if (old_.empty()) {
      unsetenv("ADALAB_THREADS");
    } else {
      setenv("ADALAB_THREADS", old_.c_str(), 1);
    }
  }

 private:
  std::string old_;
};

TEST(ConfigTextTest, ParsesKeysCommentsAndWhitespace) {
  const ConfigMap m = ParseConfigText(
      "# attack run\n"
      "eps = 0.25   # radius\n"
      "\n"
      "  noise=laplace\r\n");
  EXPECT_THAT(m, ElementsAre(Pair("eps", "0.25"), Pair("noise", "laplace")));
}

TEST(ConfigTextTest, RejectsMalformedLinesAndDuplicates) {
  EXPECT_THROW(ParseConfigText("eps 0.25\n"), ConfigError);
  EXPECT_THROW(ParseConfigText(" = 3\n"), ConfigError);
  try {
    ParseConfigText("eps = 0.1\neps = 0.2\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_THAT(e.what(), HasSubstr("given twice"));
  }
  EXPECT_THROW(ReadConfigFile("/nonexistent/adalab.conf"), ConfigError);
}

TEST(ExperimentConfigTest, TypedValuesAndKindDefaults) {
  const ExperimentConfig attack = Config(
      ExperimentKind::kAttack,
      {{"eps", "0.125"}, {"k", "auto"}, {"noise", "gaussian"}, {"b", "0.2"},
       {"master_seed", "0x10"}, {"check_concentration", "true"}});
  EXPECT_EQ(attack.eps, 0.125);
  EXPECT_FALSE(attack.k.has_value());
  EXPECT_EQ(attack.noise.family, NoiseFamily::kGaussian);
  EXPECT_EQ(attack.noise.scale, 0.2);
  EXPECT_TRUE(attack.noise_scale_set);
  EXPECT_EQ(attack.master_seed, 16u);
  EXPECT_TRUE(attack.check_concentration);

  const ExperimentConfig simple = Config(ExperimentKind::kSimpleAttack, {});
  EXPECT_EQ(simple.gamma, 0.1);
  EXPECT_EQ(simple.noise.scale, 0.0);
  const ExperimentConfig llr = Config(ExperimentKind::kLlr, {});
  EXPECT_EQ(llr.noise.num_bins(), 16);
  EXPECT_DOUBLE_EQ(llr.eps / llr.noise.scale, 0.2);
  EXPECT_FALSE(Config(ExperimentKind::kCoupling, {}).final_query);
}

TEST(ExperimentConfigTest, SchemaErrors) {
  EXPECT_THROW(Config(ExperimentKind::kLlr, {{"gamma", "0.1"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"eps", "abc"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"n", "1.5"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"trials", "-1"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"kind", "llr"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"hoeffding_c", "large"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"master_seed", "-3"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"grid_step", "0.3"}}), ConfigError);
  EXPECT_THROW(Config(ExperimentKind::kAttack, {{"check_concentration", "maybe"}}),
               ConfigError);
  EXPECT_THROW(ParseExperimentKind("sweep"), ConfigError);
}

TEST(ExperimentConfigTest, EveryAllowedKeyIsAccepted) {
  for (ExperimentKind kind :
       {ExperimentKind::kAttack, ExperimentKind::kSimpleAttack,
        ExperimentKind::kPositiveAccuracy, ExperimentKind::kCoupling, ExperimentKind::kLlr,
        ExperimentKind::kDivergence, ExperimentKind::kBoundsTable}) {
    EXPECT_EQ(ParseExperimentKind(ExperimentKindName(kind)), kind);
    for (const std::string& key : ExperimentConfig::AllowedKeys(kind)) {
      ConfigMap one;
      if (key == "kind") {
        one[key] = ExperimentKindName(kind);
      } else if (key == "noise") {
        one[key] = "laplace";
      } else if (key == "mechanism") {
        one[key] = "real";
      } else if (key == "hoeffding_c") {
        one[key] = "derived";
      } else if (key == "check_concentration" || key == "final_query") {
        one[key] = "false";
      } else if (key == "clip_lo") {
        one[key] = "-0.5";
      } else if (key == "clip_hi") {
        one[key] = "1.5";
      } else if (key == "grid_step") {
        one[key] = "0.125";
      } else {
        one[key] = "1";
      }
      EXPECT_NO_THROW(Config(kind, one)) << ExperimentKindName(kind) << " " << key;
    }
  }
}

TEST(RunExperimentTest, ZeroTrialsGiveEmptySummary) {
  const ExperimentOutput out =
      RunExperiment(Config(ExperimentKind::kAttack, {{"k", "10"}, {"trials", "0"}}));
  EXPECT_TRUE(out.trials.empty());
  EXPECT_EQ(out.summary["success_count"], 0);
  EXPECT_EQ(out.summary["trials"], 0);
  EXPECT_TRUE(out.AllAssertionsPassed());
  EXPECT_TRUE(out.summary.contains("wall_clock_seconds"));
}

TEST(RunExperimentTest, AttackReproducibleAndSeedSensitive) {
  const ConfigMap base = {{"k", "60"}, {"trials", "6"}, {"check_concentration", "true"}};
  ConfigMap other = base;
  other["master_seed"] = "2";
  const ExperimentOutput a = RunExperiment(Config(ExperimentKind::kAttack, base));
  const ExperimentOutput b = RunExperiment(Config(ExperimentKind::kAttack, base));
  const ExperimentOutput c = RunExperiment(Config(ExperimentKind::kAttack, other));
  EXPECT_EQ(json(a.trials).dump(), json(b.trials).dump());
  EXPECT_NE(json(a.trials).dump(), json(c.trials).dump());
  EXPECT_EQ(a.summary["concentration_violations"], 0);
  EXPECT_EQ(a.summary["queries_checked"], 6 * 61);
}

TEST(RunExperimentTest, SerialAndParallelAgree) {
  const ExperimentConfig cfg =
      Config(ExperimentKind::kAttack, {{"k", "40"}, {"trials", "12"}, {"b", "0.3"}});
  ExperimentOutput serial;
  ExperimentOutput parallel;
  {
    ScopedThreads one("1");
    EXPECT_EQ(ThreadCount(100), 1);
    serial = RunExperiment(cfg);
  }
  {
    ScopedThreads four("4");
    EXPECT_EQ(ThreadCount(100), 4);
    EXPECT_EQ(ThreadCount(2), 2);
    parallel = RunExperiment(cfg);
  }
  EXPECT_EQ(json(serial.trials).dump(), json(parallel.trials).dump());
  json s = serial.summary;
  json p = parallel.summary;
  s.erase("wall_clock_seconds");
  p.erase("wall_clock_seconds");
  EXPECT_EQ(s, p);
}

TEST(RunExperimentTest, TrialRecordsDependOnlyOnTheirIndex) {
  const ExperimentOutput few =
      RunExperiment(Config(ExperimentKind::kAttack, {{"k", "30"}, {"trials", "3"}}));
  const ExperimentOutput many =
      RunExperiment(Config(ExperimentKind::kAttack, {{"k", "30"}, {"trials", "8"}}));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(few.trials[i], many.trials[i]);
}

TEST(RunExperimentTest, TrialErrorsAreRecorded) {
  const ExperimentOutput out = RunExperiment(
      Config(ExperimentKind::kAttack, {{"k", "5"}, {"trials", "3"}, {"candidates", "1000"}}));
  EXPECT_EQ(out.errors, 3);
  ASSERT_EQ(out.trials.size(), 3u);
  EXPECT_THAT(out.trials[1]["error"].get<std::string>(), HasSubstr("candidate count"));
}

TEST(ParallelForTest, VisitsEveryIndexOnceAndRethrows) {
  ScopedThreads three("3");
  std::vector<int> hits(100, 0);
  ParallelFor(100, [&](std::int64_t i) { ++hits[static_cast<std::size_t>(i)]; });
  EXPECT_EQ(hits, std::vector<int>(100, 1));
  EXPECT_THROW(ParallelFor(10,
                           [](std::int64_t i) {
                             if (i == 7) throw std::runtime_error("boom");
                           }),
               std::runtime_error);
}

TEST(RunExperimentTest, SimpleAttackBreaksEveryTrial) {
  const ExperimentOutput out = RunExperiment(Config(
      ExperimentKind::kSimpleAttack, {{"trials", "20"}, {"check_concentration", "true"}}));
  EXPECT_EQ(out.summary["broken_count"], 20);
  EXPECT_NEAR(out.summary["min_worst_deviation"].get<double>(), 0.9, 1e-12);
  EXPECT_TRUE(out.AllAssertionsPassed());
}

TEST(RunExperimentTest, CouplingHasNoMismatches) {
  const ExperimentOutput out = RunExperiment(
      Config(ExperimentKind::kCoupling, {{"trials", "10"}, {"k", "100"}}));
  EXPECT_EQ(out.summary["mismatch_count"], 0);
  EXPECT_EQ(out.summary["switched_count"], 0);
  EXPECT_TRUE(out.AllAssertionsPassed());
}

TEST(RunExperimentTest, DivergenceWithinBounds) {
  const ExperimentOutput out = RunExperiment(Config(ExperimentKind::kDivergence, {}));
  EXPECT_EQ(out.summary["hybrid_mode"], "real");
  EXPECT_NEAR(out.summary["shift"].get<double>(), 0.01, 1e-15);
  EXPECT_TRUE(out.AllAssertionsPassed());
}

TEST(RunExperimentTest, BoundsTableReportsEveryCalculator) {
  const ExperimentOutput out = RunExperiment(Config(
      ExperimentKind::kBoundsTable,
      {{"eps", "0.0001"}, {"gamma", "1e-6"}, {"alpha", "0.5"}, {"beta", "0.5"}}));
  for (const char* key : {"r", "m", "N", "attack_k", "negative_k", "positive_k",
                          "epsilon_star", "zeta", "accuracy_lower_bound"}) {
    EXPECT_TRUE(out.summary.contains(key)) << key;
  }
  EXPECT_EQ(out.summary["hoeffding_c"], 1800.0);
  EXPECT_TRUE(out.AllAssertionsPassed());
}

TEST(RunExperimentTest, OraclePositiveAccuracy) {
  const ExperimentOutput out = RunExperiment(Config(
      ExperimentKind::kPositiveAccuracy,
      {{"mechanism", "oracle"}, {"alpha", "0.3"}, {"k", "10"}, {"trials", "200"},
       {"candidates", "64"}}));
  EXPECT_EQ(out.summary["info_rounds"], 9);
  EXPECT_TRUE(out.AllAssertionsPassed());
}

TEST(CalibrationTest, ReturnsPowerOfTwoAtMostDerived) {
  const ExperimentConfig cfg = Config(
      ExperimentKind::kAttack,
      {{"hoeffding_c", "calibrate"}, {"calibration_trials", "20"}, {"candidates", "100"}});
  const double c = ResolveHoeffdingConstant(cfg);
  EXPECT_LE(c, DerivedHoeffdingConstant(cfg.noise));
  EXPECT_EQ(std::exp2(std::round(std::log2(c))), c);
  EXPECT_EQ(c, CalibrateHoeffdingConstant(cfg));
  EXPECT_EQ(ResolveHoeffdingConstant(Config(ExperimentKind::kAttack, {{"hoeffding_c", "3"}})),
            3.0);
}

TEST(WriteOutputsTest, WritesEveryFormatAndSummaries) {
  const ExperimentOutput out =
      RunExperiment(Config(ExperimentKind::kAttack, {{"k", "20"}, {"trials", "3"}}));
  const std::string dir = ::testing::TempDir();

  WriteOutputs(out, dir + "adalab_run.csv");
  const std::string csv = Slurp(dir + "adalab_run.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "trial,final_answer,final_deviation,final_noise,j_s,j_star,signal_deviation,"
            "success");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const json summary = json::parse(Slurp(dir + "adalab_run.summary.json"));
  EXPECT_EQ(summary["k"], 20);
  EXPECT_THAT(Slurp(dir + "adalab_run.summary.csv"), HasSubstr("success_rate,"));

  WriteOutputs(out, dir + "adalab_run.json");
  const json doc = json::parse(Slurp(dir + "adalab_run.json"));
  EXPECT_EQ(doc["trials"].size(), 3u);

  WriteOutputs(out, dir + "adalab_run.jsonl");
  std::istringstream lines(Slurp(dir + "adalab_run.jsonl"));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(json::parse(line)["trial"], count);
    ++count;
  }
  EXPECT_EQ(count, 3);
  for (const char* name : {"adalab_run.csv", "adalab_run.json", "adalab_run.jsonl",
                           "adalab_run.summary.json", "adalab_run.summary.csv"}) {
    std::remove((dir + name).c_str());
  }
}

int RunCli(const std::string& args) {
  const std::string command =
      std::string(ADALAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodes) {
  EXPECT_EQ(RunCli("bounds --eps 0.25 --gamma 0.01"), 0);
  EXPECT_EQ(RunCli("simple-attack --trials 3 --assert"), 0);
  EXPECT_EQ(RunCli("attack --trials 3 --k 5 --assert --set min_success_rate=1.01"), 2);
  EXPECT_EQ(RunCli("attack --trials 3 --k 5 --set bogus=1"), 1);
  EXPECT_EQ(RunCli("attack --config /nonexistent/adalab.conf"), 1);
  EXPECT_EQ(RunCli("no-such-command"), 1);
}

TEST(CliTest, ConfigFileAndOutputs) {
  const std::string dir = ::testing::TempDir();
  const std::string config = dir + "adalab_cli.conf";
  {
    std::ofstream out(config);
    out << "# coupling smoke run\ntrials = 2\nk = 20\n";
  }
  EXPECT_EQ(RunCli("coupling --config " + config + " --assert --out " + dir +
                   "adalab_cli.csv"),
            0);
  const json summary = json::parse(Slurp(dir + "adalab_cli.summary.json"));
  EXPECT_EQ(summary["mismatch_count"], 0);
  EXPECT_EQ(summary["trials"], 2);
  for (const char* name : {"adalab_cli.conf", "adalab_cli.csv", "adalab_cli.summary.json",
                           "adalab_cli.summary.csv"}) {
    std::remove((dir + name).c_str());
  }
}

TEST(CliTest, CheckConcentration) {
  const std::string dir = ::testing::TempDir();
  {
    std::ofstream q(dir + "adalab_q.json");
    q << R"({"default": 0, "overrides": [[1, 1.0]]})";
    std::ofstream d(dir + "adalab_d.json");
    d << R"({"support": [{"sample": [0, 0], "probability": 0.25},
                         {"sample": [0, 1], "probability": 0.25},
                         {"sample": [1, 0], "probability": 0.25},
                         {"sample": [1, 1], "probability": 0.25}]})";
  }
  const std::string files =
      "check-concentration --query " + dir + "adalab_q.json --distribution " + dir +
      "adalab_d.json";
  // |q(S) - 1/2| >= 0.5 on half of the mass.
  EXPECT_EQ(RunCli(files + " --eps 0.5 --gamma 0.5"), 0);
  EXPECT_EQ(RunCli(files + " --eps 0.5 --gamma 0.4"), 2);
  EXPECT_EQ(RunCli(files), 1);
  std::remove((dir + "adalab_q.json").c_str());
  std::remove((dir + "adalab_d.json").c_str());
}

}  // namespace
}  // namespace adalab
