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

// Experiment orchestration: configs, trial execution and result export.
//
// A config is a flat text file of `key = value` lines; `#` starts a comment.
// Every experiment kind accepts a fixed set of keys and rejects the rest.
// Each trial derives all of its randomness from (master_seed, trial index),
// so a run is reproducible and independent of the thread count.

#ifndef ADALAB_HARNESS_H_
#define ADALAB_HARNESS_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "adalab/core.h"
#include "adalab/mechanisms.h"

namespace adalab {

enum class ExperimentKind {
  kAttack,
  kSimpleAttack,
  kPositiveAccuracy,
  kCoupling,
  kLlr,
  kDivergence,
  kBoundsTable,
};

std::string ExperimentKindName(ExperimentKind kind);
ExperimentKind ParseExperimentKind(const std::string& name);

using ConfigMap = std::map<std::string, std::string>;

// Parses `key = value` lines. Throws ConfigError on malformed lines and on
// repeated keys.
ConfigMap ParseConfigText(const std::string& text);
ConfigMap ReadConfigFile(const std::string& path);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kAttack;
  std::int64_t trials = 0;
  std::uint64_t master_seed = 1;

  double eps = 0.25;
  double gamma = 0.01;
  std::int64_t n = 16;
  double alpha = 0.9;
  double beta = 0.1;
  double rho = 0.05;
  // Rounds; nullopt selects the calculator value for the experiment.
  std::optional<std::int64_t> k;
  NoiseSpec noise;
  // Noise scale left to the experiment default when unset.
  bool noise_scale_set = false;
  MechanismType mechanism = MechanismType::kReal;
  // Hoeffding constant for AttackK: a number, "derived" or "calibrate".
  std::string hoeffding_c = "derived";
  std::int64_t candidates = 0;
  bool check_concentration = false;
  bool final_query = true;
  double min_success_rate = 0.9;
  double deviation_threshold = 0.9;
  std::int64_t calibration_trials = 200;
  double calibration_target = 0.95;
  double tolerance = 1e-3;

  // Builds a config of the given kind from key/value pairs. Keys outside the
  // kind's schema and unparsable values throw ConfigError.
  static ExperimentConfig FromMap(ExperimentKind kind, const ConfigMap& values);

  // Keys accepted by FromMap for `kind`.
  static std::vector<std::string> AllowedKeys(ExperimentKind kind);
};

struct AssertionResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ExperimentOutput {
  std::vector<nlohmann::json> trials;
  nlohmann::json summary;
  std::vector<AssertionResult> assertions;
  std::int64_t errors = 0;

  bool AllAssertionsPassed() const;
};

// Worker count: ADALAB_THREADS when set and positive, otherwise the hardware
// concurrency, never more than `jobs`.
int ThreadCount(std::int64_t jobs);

// Calls body(i) for i in [0, count) on ThreadCount(count) threads.
void ParallelFor(std::int64_t count,
                 const std::function<void(std::int64_t)>& body);

// Smallest power-of-two Hoeffding constant, up to the derived one, whose
// pilot success rate reaches cfg.calibration_target. Pilot trials use seeds
// disjoint from the main run.
double CalibrateHoeffdingConstant(const ExperimentConfig& cfg);

// Resolves cfg.hoeffding_c to a number.
double ResolveHoeffdingConstant(const ExperimentConfig& cfg);

ExperimentOutput RunExperiment(const ExperimentConfig& cfg);

// Writes the trial records and summary. Trials go to `path` as CSV when it
// ends in ".csv", as one JSON document when it ends in ".json" and as JSON
// lines otherwise; the summary goes next to it as <stem>.summary.json and
// <stem>.summary.csv.
void WriteOutputs(const ExperimentOutput& output, const std::string& path);

}  // namespace adalab

#endif  // ADALAB_HARNESS_H_
