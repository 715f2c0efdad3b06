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

// Command-line front end. Exit codes: 0 success, 2 failed assertion or
// failed concentration check, 1 error.

#include <cstdint>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adalab/concentration.h"
#include "adalab/core.h"
#include "adalab/harness.h"
#include "adalab/serialization.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitAssertion = 2;

struct ExperimentFlags {
  adalab::ExperimentKind kind;
  CLI::App* command = nullptr;
  std::string config_path;
  bool assert_thresholds = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::string out;
  std::vector<std::string> sets;
  std::map<std::string, std::string> direct;
};

struct CheckFlags {
  std::string query_path;
  std::string distribution_path;
  double eps = 0.0;
  double gamma = 0.0;
};

void AddExperiment(CLI::App& app, const std::string& name,
                   const std::string& description, adalab::ExperimentKind kind,
                   std::vector<std::unique_ptr<ExperimentFlags>>& all,
                   const std::vector<std::string>& direct_keys) {
  auto flags = std::make_unique<ExperimentFlags>();
  flags->kind = kind;
  CLI::App* sub = app.add_subcommand(name, description);
  flags->command = sub;
  sub->add_option("--config", flags->config_path, "key = value config file");
  sub->add_flag("--assert", flags->assert_thresholds,
                "exit with status 2 when an acceptance threshold fails");
  sub->add_option("--seed", flags->seed, "master seed");
  sub->add_option("--trials", flags->trials, "number of trials");
  sub->add_option("--out", flags->out,
                  "trial output (.csv, .json or JSON lines); summaries go "
                  "alongside");
  sub->add_option("--set", flags->sets, "extra config entry key=value");
  for (const std::string& key : direct_keys) {
    sub->add_option("--" + key, flags->direct[key], "config key " + key);
  }
  all.push_back(std::move(flags));
}

int RunExperimentCommand(const ExperimentFlags& flags) {
  adalab::ConfigMap values;
  if (!flags.config_path.empty()) values = adalab::ReadConfigFile(flags.config_path);
  auto put = [&values](const std::string& key, const std::string& value) {
    values[key] = value;
  };
  for (const std::string& entry : flags.sets) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw adalab::ConfigError("--set expects key=value, got '" + entry + "'");
    }
    put(entry.substr(0, eq), entry.substr(eq + 1));
  }
  for (const auto& [key, value] : flags.direct) {
    if (!value.empty()) put(key, value);
  }
  if (flags.seed) put("master_seed", std::to_string(*flags.seed));
  if (flags.trials) put("trials", std::to_string(*flags.trials));

  const adalab::ExperimentConfig cfg =
      adalab::ExperimentConfig::FromMap(flags.kind, values);
  const adalab::ExperimentOutput output = adalab::RunExperiment(cfg);
  if (!flags.out.empty()) adalab::WriteOutputs(output, flags.out);
  std::cout << output.summary.dump(2) << "\n";
  if (output.errors > 0) {
    std::cerr << output.errors << " trial(s) failed; see the trial records\n";
    return kExitError;
  }
  if (flags.assert_thresholds && !output.AllAssertionsPassed()) {
    for (const adalab::AssertionResult& a : output.assertions) {
      if (!a.passed) std::cerr << "assertion failed: " << a.name << " (" << a.detail << ")\n";
    }
    return kExitAssertion;
  }
  return 0;
}

int RunCheckConcentration(const CheckFlags& flags) {
  const adalab::Query q =
      adalab::QueryFromJson(adalab::ReadJsonFile(flags.query_path));
  const adalab::FiniteDistribution d =
      adalab::DistributionFromJson(adalab::ReadJsonFile(flags.distribution_path));
  const adalab::ConcentrationReport report =
      adalab::CheckConcentrationExact(q, d, flags.eps, flags.gamma);
  const nlohmann::json out = {{"holds", report.holds},
                              {"deviation_mass", report.deviation_mass},
                              {"max_deviation", report.max_deviation},
                              {"true_mean", report.true_mean}};
  std::cout << out.dump(2) << "\n";
  return report.holds ? 0 : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive data analysis lab: noise-addition mechanisms, "
               "concentrated-query attacks and accuracy bounds"};
  app.require_subcommand(1);

  using adalab::ExperimentKind;
  std::vector<std::unique_ptr<ExperimentFlags>> experiments;
  AddExperiment(app, "attack", "score attack on the block-repeat instance",
                ExperimentKind::kAttack, experiments,
                {"eps", "gamma", "n", "k", "noise", "b", "beta", "hoeffding_c",
                 "mechanism"});
  AddExperiment(app, "simple-attack", "1/gamma block-indicator attack",
                ExperimentKind::kSimpleAttack, experiments,
                {"eps", "gamma", "n", "noise", "b"});
  AddExperiment(app, "positive", "accuracy of the mechanisms under the attack analyst",
                ExperimentKind::kPositiveAccuracy, experiments,
                {"eps", "gamma", "n", "k", "alpha", "beta", "noise", "b",
                 "mechanism"});
  AddExperiment(app, "coupling", "real versus hybrid transcripts under shared noise",
                ExperimentKind::kCoupling, experiments,
                {"eps", "gamma", "n", "k", "noise", "b"});
  AddExperiment(app, "llr", "transcript log-likelihood ratio tails",
                ExperimentKind::kLlr, experiments, {"eps", "k", "rho", "b"});
  AddExperiment(app, "diagnose-divergence",
                "exact single-query divergences between hybrid and oracle",
                ExperimentKind::kDivergence, experiments, {"eps", "b", "noise"});
  AddExperiment(app, "bounds", "evaluate every calculator for one parameter set",
                ExperimentKind::kBoundsTable, experiments,
                {"eps", "gamma", "alpha", "beta", "k", "hoeffding_c"});

  CheckFlags check;
  CLI::App* check_cmd = app.add_subcommand(
      "check-concentration", "exact (eps, gamma)-concentration of a query");
  check_cmd->add_option("--query", check.query_path, "query JSON file")->required();
  check_cmd->add_option("--distribution", check.distribution_path,
                        "distribution JSON file")
      ->required();
  check_cmd->add_option("--eps", check.eps, "deviation radius")->required();
  check_cmd->add_option("--gamma", check.gamma, "allowed deviation mass")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (check_cmd->parsed()) return RunCheckConcentration(check);
    for (const auto& flags : experiments) {
      if (flags->command->parsed()) return RunExperimentCommand(*flags);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
