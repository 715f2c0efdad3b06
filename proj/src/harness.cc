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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "adalab/attack.h"
#include "adalab/bounds.h"
#include "adalab/concentration.h"
#include "adalab/divergence.h"
#include "adalab/rng.h"

namespace adalab {
namespace {

using nlohmann::json;

constexpr std::uint64_t kCalibrationSalt = 0xc0ffee5eedULL;

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double ParseDouble(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      value + "'");
  }
  return parsed;
}

std::int64_t ParseInt(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" +
                      value + "'");
  }
  return parsed;
}

std::uint64_t ParseSeed(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long parsed = 0;
  try {
    parsed = std::stoull(value, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || value.front() == '-') {
    throw ConfigError("config key '" + key + "': expected a 64-bit seed");
  }
  return parsed;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false");
}

const std::vector<std::string>& NoiseKeys() {
  static const std::vector<std::string> keys = {"noise", "b", "clip_lo",
                                                "clip_hi", "grid_step"};
  return keys;
}

double Radius(double p, std::int64_t trials) {
  if (trials == 0) return 0.0;
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

double Rate(std::int64_t count, std::int64_t trials) {
  return trials == 0 ? 0.0
                     : static_cast<double>(count) / static_cast<double>(trials);
}

MechanismKind KindFor(const ExperimentConfig& cfg) {
  switch (cfg.mechanism) {
    case MechanismType::kReal:
      return MechanismKind::Real();
    case MechanismType::kOracle:
      return MechanismKind::Oracle();
    case MechanismType::kHybrid:
      break;
  }
  return MechanismKind::Hybrid(cfg.eps);
}

// Column of the mechanism's sample for one trial.
std::int64_t DrawColumn(const HardInstance& instance, std::uint64_t seed,
                        std::int64_t trial) {
  Rng draw = DeriveStream(seed, static_cast<std::uint64_t>(trial),
                          StreamLabel::kSampleDraw);
  return static_cast<std::int64_t>(
      instance.distribution->IndexForUniform(draw.Uniform()));
}

// Runs body on every trial in parallel; exceptions become error records.
std::vector<json> RunTrials(std::int64_t trials,
                            const std::function<json(std::int64_t)>& body,
                            std::int64_t& errors) {
  std::vector<json> records(static_cast<std::size_t>(std::max<std::int64_t>(trials, 0)));
  ParallelFor(trials, [&](std::int64_t i) {
    try {
      records[static_cast<std::size_t>(i)] = body(i);
    } catch (const std::exception& e) {
      records[static_cast<std::size_t>(i)] = {{"trial", i}, {"error", e.what()}};
    }
  });
  errors = 0;
  for (const json& r : records) {
    if (r.contains("error")) ++errors;
  }
  return records;
}

std::int64_t CountTrue(const std::vector<json>& records, const char* field) {
  std::int64_t count = 0;
  for (const json& r : records) {
    if (r.contains(field) && r[field].get<bool>()) ++count;
  }
  return count;
}

void AddAssertion(ExperimentOutput& out, std::string name, bool passed,
                  std::string detail) {
  out.assertions.push_back({std::move(name), passed, std::move(detail)});
}

std::string Fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

json AttackTrial(const ExperimentConfig& cfg, const HardInstance& instance,
                 std::int64_t k, std::uint64_t seed, std::int64_t trial) {
  const std::int64_t j_s = DrawColumn(instance, seed, trial);
  Mechanism mechanism(KindFor(cfg), cfg.noise,
                      instance.distribution->support_sample(static_cast<std::size_t>(j_s)),
                      instance.distribution,
                      NoiseStreams::ForTrial(seed, static_cast<std::uint64_t>(trial)));
  Algorithm1Options options;
  options.check_concentration = cfg.check_concentration;
  options.candidates = cfg.candidates;
  const Algorithm1Result r = RunAlgorithm1(
      instance, mechanism, k, j_s,
      AttackSeeds::ForTrial(seed, static_cast<std::uint64_t>(trial)), options);
  json record = {{"trial", trial},
                 {"j_s", j_s},
                 {"j_star", r.j_star},
                 {"success", r.success},
                 {"final_answer", r.final_answer},
                 {"final_deviation", r.final_deviation},
                 {"signal_deviation", r.signal_deviation},
                 {"final_noise", r.final_noise}};
  if (cfg.check_concentration) {
    record["queries_checked"] = r.queries_checked;
    record["concentration_violations"] = r.concentration_violations;
  }
  return record;
}

double SuccessRate(const ExperimentConfig& cfg, const HardInstance& instance,
                   std::int64_t k, std::uint64_t seed, std::int64_t trials) {
  std::int64_t errors = 0;
  const auto records = RunTrials(
      trials, [&](std::int64_t i) { return AttackTrial(cfg, instance, k, seed, i); },
      errors);
  if (errors > 0) throw std::runtime_error("calibration trial failed");
  return Rate(CountTrue(records, "success"), trials);
}

ExperimentOutput RunAttack(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  const HardInstance instance = BuildHardInstance(cfg.eps, cfg.gamma, cfg.n);
  const double c = ResolveHoeffdingConstant(cfg);
  const std::int64_t k = cfg.k ? *cfg.k : AttackK(cfg.eps, cfg.gamma, cfg.beta, c);
  out.trials = RunTrials(
      cfg.trials,
      [&](std::int64_t i) { return AttackTrial(cfg, instance, k, cfg.master_seed, i); },
      out.errors);

  std::int64_t successes = 0;
  std::int64_t final_ge = 0;
  std::int64_t signal_ge_on_success = 0;
  std::int64_t violations = 0;
  std::int64_t checked = 0;
  double deviation_sum = 0.0;
  for (const json& r : out.trials) {
    if (r.contains("error")) continue;
    const bool success = r["success"].get<bool>();
    successes += success;
    deviation_sum += r["final_deviation"].get<double>();
    if (r["final_deviation"].get<double>() >= cfg.deviation_threshold) ++final_ge;
    if (success && r["signal_deviation"].get<double>() >= cfg.deviation_threshold) {
      ++signal_ge_on_success;
    }
    if (r.contains("concentration_violations")) {
      violations += r["concentration_violations"].get<std::int64_t>();
      checked += r["queries_checked"].get<std::int64_t>();
    }
  }
  const double rate = Rate(successes, cfg.trials);
  out.summary = {{"r", instance.num_blocks()},
                 {"m", instance.support_size()},
                 {"N", instance.domain.size()},
                 {"k", k},
                 {"hoeffding_c", c},
                 {"success_count", successes},
                 {"success_rate", rate},
                 {"success_rate_radius", Radius(rate, cfg.trials)},
                 {"mean_final_deviation",
                  cfg.trials == 0 ? 0.0 : deviation_sum / static_cast<double>(cfg.trials)},
                 {"final_deviation_ge_threshold_rate", Rate(final_ge, cfg.trials)},
                 {"signal_deviation_ge_threshold_on_success", signal_ge_on_success},
                 {"clip_tail_mass", ClipTailMass(cfg.noise)}};
  if (cfg.check_concentration) {
    out.summary["queries_checked"] = checked;
    out.summary["concentration_violations"] = violations;
    AddAssertion(out, "attack queries concentrated", violations == 0,
                 std::to_string(violations) + " violations in " +
                     std::to_string(checked) + " queries");
  }
  if (cfg.trials > 0) {
    AddAssertion(out, "success rate", rate >= cfg.min_success_rate,
                 Fmt(rate) + " vs " + Fmt(cfg.min_success_rate));
    AddAssertion(out, "signal deviation on success",
                 signal_ge_on_success == successes,
                 std::to_string(signal_ge_on_success) + " of " +
                     std::to_string(successes));
  }
  return out;
}

ExperimentOutput RunSimpleAttack(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  const DisjointBlocksInstance instance =
      BuildDisjointBlocksInstance(cfg.gamma, cfg.n);
  const auto r = static_cast<std::int64_t>(instance.queries.size());
  out.trials = RunTrials(
      cfg.trials,
      [&](std::int64_t i) {
        Rng draw = DeriveStream(cfg.master_seed, static_cast<std::uint64_t>(i),
                                StreamLabel::kSampleDraw);
        const auto index = instance.distribution->IndexForUniform(draw.Uniform());
        Mechanism mechanism(MechanismKind::Real(), cfg.noise,
                            instance.distribution->support_sample(index),
                            instance.distribution,
                            NoiseStreams::ForTrial(cfg.master_seed,
                                                   static_cast<std::uint64_t>(i)));
        std::optional<double> check;
        if (cfg.check_concentration) check = cfg.eps;
        const SimpleAttackResult res =
            RunSimpleGammaAttack(instance, mechanism, check);
        json record = {{"trial", i},
                       {"sample_index", index},
                       {"worst_deviation", res.worst_deviation},
                       {"breaking_query_index", res.breaking_query_index},
                       {"queries", r}};
        if (check) record["concentration_violations"] = res.concentration_violations;
        return record;
      },
      out.errors);
  std::int64_t broken = 0;
  std::int64_t violations = 0;
  double worst_min = 1.0;
  for (const json& rec : out.trials) {
    if (rec.contains("error")) continue;
    const double w = rec["worst_deviation"].get<double>();
    worst_min = std::min(worst_min, w);
    if (w >= cfg.deviation_threshold) ++broken;
    if (rec.contains("concentration_violations")) {
      violations += rec["concentration_violations"].get<std::int64_t>();
    }
  }
  out.summary = {{"queries", r},
                 {"broken_count", broken},
                 {"broken_rate", Rate(broken, cfg.trials)},
                 {"min_worst_deviation", cfg.trials == 0 ? 0.0 : worst_min}};
  if (cfg.trials > 0) {
    AddAssertion(out, "every trial broken", broken == cfg.trials,
                 std::to_string(broken) + " of " + std::to_string(cfg.trials));
  }
  if (cfg.check_concentration) {
    out.summary["concentration_violations"] = violations;
    AddAssertion(out, "simple attack queries concentrated", violations == 0,
                 std::to_string(violations) + " violations at eps = " + Fmt(cfg.eps));
  }
  return out;
}

ExperimentOutput RunPositiveAccuracy(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  const HardInstance instance = BuildHardInstance(cfg.eps, cfg.gamma, cfg.n);
  NoiseSpec noise = cfg.noise;
  if (!cfg.noise_scale_set) noise.scale = PositiveNoiseScale(cfg.eps, cfg.alpha);
  std::int64_t k = 0;
  std::string diagnostic;
  if (cfg.k) {
    k = *cfg.k;
  } else {
    const PositiveKResult search = PositiveK(cfg.eps, cfg.gamma, cfg.alpha, cfg.beta);
    k = search.k;
    diagnostic = search.diagnostic;
  }
  const bool final_query = cfg.final_query && k >= 1;
  const std::int64_t info_rounds = final_query ? k - 1 : k;

  out.trials = RunTrials(
      cfg.trials,
      [&](std::int64_t i) {
        const auto trial = static_cast<std::uint64_t>(i);
        const std::int64_t j_s = DrawColumn(instance, cfg.master_seed, i);
        const Sample sample =
            instance.distribution->support_sample(static_cast<std::size_t>(j_s));
        Mechanism mechanism(KindFor(cfg), noise, sample, instance.distribution,
                            NoiseStreams::ForTrial(cfg.master_seed, trial));
        Algorithm1Analyst analyst(instance, info_rounds,
                                  AttackSeeds::ForTrial(cfg.master_seed, trial),
                                  final_query, cfg.candidates);
        Transcript last;
        bool accurate = true;
        bool good = true;
        double max_error = 0.0;
        for (std::int64_t t = 0; t < k; ++t) {
          Query q = analyst.NextQuery(last);
          const double answer = mechanism.Answer(q);
          const double truth = TrueMean(q, *instance.distribution);
          const double error = std::abs(answer - truth);
          max_error = std::max(max_error, error);
          accurate = accurate && error <= cfg.alpha;
          good = good && std::abs(EmpiricalMean(q, sample) - truth) <= cfg.eps;
          last.rounds.clear();
          last.rounds.push_back({std::move(q), answer});
        }
        return json{{"trial", i},
                    {"j_s", j_s},
                    {"accurate", accurate},
                    {"eps_good", good},
                    {"good_and_accurate", good && accurate},
                    {"max_error", max_error},
                    {"switched", mechanism.switched()}};
      },
      out.errors);

  std::int64_t accurate = 0;
  std::int64_t good_and_accurate = 0;
  for (const json& r : out.trials) {
    if (r.contains("error")) continue;
    accurate += r["accurate"].get<bool>();
    good_and_accurate += r["good_and_accurate"].get<bool>();
  }
  const double rho = cfg.beta / 4.0;
  const double zeta = Zeta(k, cfg.alpha, noise.scale);
  const double lower = AccuracyLowerBound(
      {cfg.eps, cfg.gamma, cfg.alpha, cfg.beta, rho, noise.scale, k});
  const double failure_rate = 1.0 - Rate(accurate, cfg.trials);
  const double good_rate = Rate(good_and_accurate, cfg.trials);
  out.summary = {{"k", k},
                 {"info_rounds", info_rounds},
                 {"final_query", final_query},
                 {"b", noise.scale},
                 {"rho", rho},
                 {"zeta", zeta},
                 {"eps_star", EpsilonStar(k, cfg.eps, noise.scale, rho)},
                 {"accuracy_lower_bound", lower},
                 {"accurate_count", accurate},
                 {"failure_rate", cfg.trials == 0 ? 0.0 : failure_rate},
                 {"good_and_accurate_rate", good_rate},
                 {"oracle_bound", 1.0 - static_cast<double>(k) * cfg.gamma - zeta}};
  if (!diagnostic.empty()) out.summary["positive_k_diagnostic"] = diagnostic;
  if (cfg.trials == 0) return out;
  const double t = static_cast<double>(cfg.trials);
  if (cfg.mechanism == MechanismType::kOracle) {
    const double threshold =
        1.0 - static_cast<double>(k) * cfg.gamma - zeta - 3.0 * std::sqrt(1.0 / t);
    AddAssertion(out, "oracle good and accurate", good_rate >= threshold,
                 Fmt(good_rate) + " vs " + Fmt(threshold));
  } else {
    const double threshold = cfg.beta + 3.0 * std::sqrt(cfg.beta / t);
    AddAssertion(out, "accuracy failure rate", failure_rate <= threshold,
                 Fmt(failure_rate) + " vs " + Fmt(threshold));
    AddAssertion(out, "accuracy lower bound", lower >= 1.0 - cfg.beta,
                 Fmt(lower) + " vs " + Fmt(1.0 - cfg.beta));
  }
  return out;
}

ExperimentOutput RunCoupling(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  const HardInstance instance = BuildHardInstance(cfg.eps, cfg.gamma, cfg.n);
  const std::int64_t k = cfg.k.value_or(1000);
  const std::int64_t rounds = k + (cfg.final_query ? 1 : 0);
  out.trials = RunTrials(
      cfg.trials,
      [&](std::int64_t i) {
        const auto trial = static_cast<std::uint64_t>(i);
        const std::int64_t j_s = DrawColumn(instance, cfg.master_seed, i);
        const Sample sample =
            instance.distribution->support_sample(static_cast<std::size_t>(j_s));
        const NoiseStreams streams = NoiseStreams::ForTrial(cfg.master_seed, trial);
        const AttackSeeds seeds = AttackSeeds::ForTrial(cfg.master_seed, trial);
        Mechanism real(MechanismKind::Real(), cfg.noise, sample,
                       instance.distribution, streams);
        Mechanism hybrid(MechanismKind::Hybrid(cfg.eps), cfg.noise, sample,
                         instance.distribution, streams);
        Algorithm1Analyst real_analyst(instance, k, seeds, cfg.final_query,
                                       cfg.candidates);
        Algorithm1Analyst hybrid_analyst(instance, k, seeds, cfg.final_query,
                                         cfg.candidates);
        const Transcript a = RunInteraction(real_analyst, real, rounds);
        const Transcript b = RunInteraction(hybrid_analyst, hybrid, rounds);
        std::int64_t first_mismatch = -1;
        for (std::size_t t = 0; t < a.rounds.size(); ++t) {
          if (!(a.rounds[t] == b.rounds[t])) {
            first_mismatch = static_cast<std::int64_t>(t);
            break;
          }
        }
        return json{{"trial", i},
                    {"j_s", j_s},
                    {"mismatch", first_mismatch >= 0},
                    {"first_mismatch_round", first_mismatch},
                    {"hybrid_switched", hybrid.switched()}};
      },
      out.errors);
  const std::int64_t mismatches = CountTrue(out.trials, "mismatch");
  out.summary = {{"k", k},
                 {"rounds", rounds},
                 {"mismatch_count", mismatches},
                 {"switched_count", CountTrue(out.trials, "hybrid_switched")}};
  AddAssertion(out, "coupled transcripts identical", mismatches == 0,
               std::to_string(mismatches) + " mismatching trials");
  return out;
}

std::shared_ptr<const FiniteDistribution> TwoPointDistribution() {
  return std::make_shared<const FiniteDistribution>(FiniteDistribution::Explicit(
      {{Sample({0}), 0.5}, {Sample({1}), 0.5}}));
}

ExperimentOutput RunLlr(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  LlrSetup setup;
  setup.noise = cfg.noise;
  setup.sample = Sample({0});
  setup.distribution = TwoPointDistribution();
  setup.k = cfg.k.value_or(20);
  setup.eps = cfg.eps;
  setup.rho = cfg.rho;
  setup.trials = cfg.trials;
  setup.master_seed = cfg.master_seed;
  ThresholdAnalyst analyst(Query(0.0, {{0, 0.5 + cfg.eps}, {1, 0.5 - cfg.eps}}),
                           Query(0.0, {{0, 0.5 - cfg.eps}, {1, 0.5 + cfg.eps}}),
                           0.5);
  const LlrResult result = CompositionLlrExperiment(analyst, setup);
  for (std::int64_t i = 0; i < cfg.trials; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out.trials.push_back({{"trial", i},
                          {"llr_hybrid_over_oracle", result.hybrid_over_oracle.llrs[idx]},
                          {"llr_oracle_over_hybrid", result.oracle_over_hybrid.llrs[idx]}});
  }
  const double bound =
      cfg.rho + 2.0 * std::sqrt(cfg.rho * (1.0 - cfg.rho) /
                                std::max<double>(1.0, static_cast<double>(cfg.trials)));
  auto direction = [](const LlrDirection& d) {
    return json{{"exceed_count", d.exceed_count},
                {"exceed_fraction", d.exceed_fraction()},
                {"mean_llr", d.mean_llr},
                {"max_llr", d.max_llr}};
  };
  out.summary = {{"k", setup.k},
                 {"eps_over_b", cfg.eps / cfg.noise.scale},
                 {"eps_star", result.eps_star},
                 {"bins", cfg.noise.num_bins()},
                 {"threshold", bound},
                 {"hybrid_over_oracle", direction(result.hybrid_over_oracle)},
                 {"oracle_over_hybrid", direction(result.oracle_over_hybrid)}};
  if (cfg.trials > 0) {
    AddAssertion(out, "LLR tail hybrid/oracle",
                 result.hybrid_over_oracle.exceed_fraction() <= bound,
                 Fmt(result.hybrid_over_oracle.exceed_fraction()) + " vs " + Fmt(bound));
    AddAssertion(out, "LLR tail oracle/hybrid",
                 result.oracle_over_hybrid.exceed_fraction() <= bound,
                 Fmt(result.oracle_over_hybrid.exceed_fraction()) + " vs " + Fmt(bound));
  }
  return out;
}

ExperimentOutput RunDivergence(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  // q(S) = 2 eps and q(D) = eps, so the shift is exactly eps.
  const Query q(0.0, {{0, 2.0 * cfg.eps}});
  const auto distribution = TwoPointDistribution();
  const Mechanism hybrid(MechanismKind::Hybrid(cfg.eps), cfg.noise, Sample({0}),
                         distribution, {});
  const Mechanism oracle(MechanismKind::Oracle(), cfg.noise, Sample({0}),
                         distribution, {});
  const auto [center, mode] = hybrid.NextCenter(q);
  const DivergenceReport report = DiagnoseDivergence(hybrid, oracle, q);
  const double ratio = cfg.eps / cfg.noise.scale;
  const double max_bound = ratio + cfg.tolerance;
  const double kl_bound = ratio * std::expm1(ratio) + cfg.tolerance;
  out.summary = {{"shift", center - TrueMean(q, *distribution)},
                 {"hybrid_mode", mode == AnswerMode::kReal ? "real" : "oracle"},
                 {"bins", cfg.noise.num_bins()},
                 {"max_div_ab", report.max_div_ab},
                 {"max_div_ba", report.max_div_ba},
                 {"kl_ab", report.kl_ab},
                 {"kl_ba", report.kl_ba},
                 {"max_div_bound", max_bound},
                 {"kl_bound", kl_bound}};
  AddAssertion(out, "hybrid answers from the sample", mode == AnswerMode::kReal,
               "shift " + Fmt(center - TrueMean(q, *distribution)));
  AddAssertion(out, "max divergence",
               std::max(report.max_div_ab, report.max_div_ba) <= max_bound,
               Fmt(std::max(report.max_div_ab, report.max_div_ba)) + " vs " +
                   Fmt(max_bound));
  AddAssertion(out, "KL divergence",
               std::max(report.kl_ab, report.kl_ba) <= kl_bound,
               Fmt(std::max(report.kl_ab, report.kl_ba)) + " vs " + Fmt(kl_bound));
  return out;
}

ExperimentOutput RunBoundsTable(const ExperimentConfig& cfg) {
  ExperimentOutput out;
  const HardInstanceShape shape = HardInstanceShapeFor(cfg.eps, cfg.gamma);
  const double c = ResolveHoeffdingConstant(cfg);
  const std::int64_t attack_k = AttackK(cfg.eps, cfg.gamma, cfg.beta, c);
  const std::int64_t negative_k = NegativeK(cfg.eps, cfg.gamma, cfg.beta, c);
  out.summary = {{"r", shape.num_blocks},
                 {"m", shape.block_size},
                 {"N", shape.domain_size},
                 {"hoeffding_c", c},
                 {"attack_k", attack_k},
                 {"negative_k", negative_k}};
  if (cfg.eps < cfg.alpha && cfg.alpha < 1.0) {
    const PositiveKResult pos = PositiveK(cfg.eps, cfg.gamma, cfg.alpha, cfg.beta);
    const std::int64_t k = cfg.k.value_or(pos.k);
    out.summary["positive_k"] = pos.k;
    out.summary["positive_k_diagnostic"] = pos.diagnostic;
    out.summary["b"] = pos.b;
    out.summary["rho"] = pos.rho;
    out.summary["evaluated_k"] = k;
    out.summary["epsilon_star"] = EpsilonStar(k, cfg.eps, pos.b, pos.rho);
    out.summary["zeta"] = Zeta(k, cfg.alpha, pos.b);
    out.summary["accuracy_lower_bound"] = AccuracyLowerBound(
        {cfg.eps, cfg.gamma, cfg.alpha, cfg.beta, pos.rho, pos.b, k});
    AddAssertion(out, "positive_k below negative_k", pos.k < negative_k,
                 std::to_string(pos.k) + " vs " + std::to_string(negative_k));
  }
  return out;
}

std::string CsvField(const json& v) {
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
      if (ch == '"') quoted += '"';
      quoted += ch;
    }
    return quoted + "\"";
  }
  if (v.is_null()) return "";
  return v.dump();
}

void Flatten(const json& v, const std::string& prefix,
             std::vector<std::pair<std::string, json>>& rows) {
  if (v.is_object()) {
    for (auto it = v.begin(); it != v.end(); ++it) {
      Flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), rows);
    }
  } else {
    rows.emplace_back(prefix, v);
  }
}

std::string Stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path;
  }
  return path.substr(0, dot);
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

}  // namespace

std::string ExperimentKindName(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kAttack:
      return "attack";
    case ExperimentKind::kSimpleAttack:
      return "simple_attack";
    case ExperimentKind::kPositiveAccuracy:
      return "positive_accuracy";
    case ExperimentKind::kCoupling:
      return "coupling";
    case ExperimentKind::kLlr:
      return "llr";
    case ExperimentKind::kDivergence:
      return "divergence";
    case ExperimentKind::kBoundsTable:
      return "bounds_table";
  }
  return "unknown";
}

ExperimentKind ParseExperimentKind(const std::string& name) {
  for (ExperimentKind kind :
       {ExperimentKind::kAttack, ExperimentKind::kSimpleAttack,
        ExperimentKind::kPositiveAccuracy, ExperimentKind::kCoupling,
        ExperimentKind::kLlr, ExperimentKind::kDivergence,
        ExperimentKind::kBoundsTable}) {
    if (ExperimentKindName(kind) == name) return kind;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

ConfigMap ParseConfigText(const std::string& text) {
  ConfigMap values;
  std::istringstream is(text);
  std::string line;
  int line_number = 0;
  while (std::getline(is, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected key = value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_number) + ": empty key");
    }
    if (!values.emplace(key, value).second) {
      throw ConfigError("config key '" + key + "' given twice");
    }
  }
  return values;
}

ConfigMap ReadConfigFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return ParseConfigText(buffer.str());
}

std::vector<std::string> ExperimentConfig::AllowedKeys(ExperimentKind kind) {
  std::vector<std::string> keys = {"kind", "trials", "master_seed"};
  auto add = [&keys](std::initializer_list<const char*> more) {
    keys.insert(keys.end(), more.begin(), more.end());
  };
  auto add_noise = [&keys] {
    keys.insert(keys.end(), NoiseKeys().begin(), NoiseKeys().end());
  };
  switch (kind) {
    case ExperimentKind::kAttack:
      add({"eps", "gamma", "n", "beta", "k", "hoeffding_c", "candidates",
           "check_concentration", "mechanism", "min_success_rate",
           "deviation_threshold", "calibration_trials", "calibration_target"});
      add_noise();
      break;
    case ExperimentKind::kSimpleAttack:
      add({"eps", "gamma", "n", "check_concentration", "deviation_threshold"});
      add_noise();
      break;
    case ExperimentKind::kPositiveAccuracy:
      add({"eps", "gamma", "n", "alpha", "beta", "k", "mechanism", "candidates",
           "final_query"});
      add_noise();
      break;
    case ExperimentKind::kCoupling:
      add({"eps", "gamma", "n", "k", "candidates", "final_query"});
      add_noise();
      break;
    case ExperimentKind::kLlr:
      add({"eps", "k", "rho"});
      add_noise();
      break;
    case ExperimentKind::kDivergence:
      add({"eps", "tolerance"});
      add_noise();
      break;
    case ExperimentKind::kBoundsTable:
      add({"eps", "gamma", "alpha", "beta", "k", "hoeffding_c", "clip_lo",
           "clip_hi"});
      break;
  }
  return keys;
}

ExperimentConfig ExperimentConfig::FromMap(ExperimentKind kind,
                                           const ConfigMap& values) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ExperimentKind::kSimpleAttack:
      cfg.gamma = 0.1;
      cfg.n = 1;
      cfg.eps = 0.2;
      cfg.noise.scale = 0.0;
      break;
    case ExperimentKind::kCoupling:
      cfg.final_query = false;
      break;
    case ExperimentKind::kLlr:
      cfg.eps = 0.015625;
      cfg.noise.scale = 0.078125;
      cfg.noise.grid_step = 0.125;
      break;
    case ExperimentKind::kDivergence:
      cfg.eps = 0.01;
      cfg.noise.grid_step = 0x1.0p-10;
      break;
    case ExperimentKind::kPositiveAccuracy:
      cfg.eps = 0.01;
      cfg.gamma = 1e-6;
      cfg.n = 100;
      cfg.alpha = 0.1;
      break;
    default:
      break;
  }

  const std::vector<std::string> allowed = AllowedKeys(kind);
  const std::set<std::string> allowed_set(allowed.begin(), allowed.end());
  for (const auto& [key, value] : values) {
    if (!allowed_set.count(key)) {
      throw ConfigError("config key '" + key + "' is not valid for " +
                        ExperimentKindName(kind) + " experiments");
    }
    if (key == "kind") {
      if (ParseExperimentKind(value) != kind) {
        throw ConfigError("config kind '" + value + "' does not match " +
                          ExperimentKindName(kind));
      }
    } else if (key == "trials") {
      cfg.trials = ParseInt(key, value);
    } else if (key == "master_seed") {
      cfg.master_seed = ParseSeed(key, value);
    } else if (key == "eps") {
      cfg.eps = ParseDouble(key, value);
    } else if (key == "gamma") {
      cfg.gamma = ParseDouble(key, value);
    } else if (key == "n") {
      cfg.n = ParseInt(key, value);
    } else if (key == "alpha") {
      cfg.alpha = ParseDouble(key, value);
    } else if (key == "beta") {
      cfg.beta = ParseDouble(key, value);
    } else if (key == "rho") {
      cfg.rho = ParseDouble(key, value);
    } else if (key == "k") {
      if (value != "auto") cfg.k = ParseInt(key, value);
    } else if (key == "noise") {
      cfg.noise.family = ParseNoiseFamily(value);
    } else if (key == "b") {
      cfg.noise.scale = ParseDouble(key, value);
      cfg.noise_scale_set = true;
    } else if (key == "clip_lo") {
      cfg.noise.clip_lo = ParseDouble(key, value);
    } else if (key == "clip_hi") {
      cfg.noise.clip_hi = ParseDouble(key, value);
    } else if (key == "grid_step") {
      cfg.noise.grid_step = ParseDouble(key, value);
    } else if (key == "mechanism") {
      cfg.mechanism = ParseMechanismType(value);
    } else if (key == "hoeffding_c") {
      if (value != "derived" && value != "calibrate") ParseDouble(key, value);
      cfg.hoeffding_c = value;
    } else if (key == "candidates") {
      cfg.candidates = ParseInt(key, value);
    } else if (key == "check_concentration") {
      cfg.check_concentration = ParseBool(key, value);
    } else if (key == "final_query") {
      cfg.final_query = ParseBool(key, value);
    } else if (key == "min_success_rate") {
      cfg.min_success_rate = ParseDouble(key, value);
    } else if (key == "deviation_threshold") {
      cfg.deviation_threshold = ParseDouble(key, value);
    } else if (key == "calibration_trials") {
      cfg.calibration_trials = ParseInt(key, value);
    } else if (key == "calibration_target") {
      cfg.calibration_target = ParseDouble(key, value);
    } else if (key == "tolerance") {
      cfg.tolerance = ParseDouble(key, value);
    }
  }
  if (cfg.trials < 0) throw ConfigError("trials must be non-negative");
  if (cfg.k && *cfg.k < 0) throw ConfigError("k must be non-negative");
  if (kind != ExperimentKind::kBoundsTable) cfg.noise.Validate();
  return cfg;
}

bool ExperimentOutput::AllAssertionsPassed() const {
  return std::all_of(assertions.begin(), assertions.end(),
                     [](const AssertionResult& a) { return a.passed; });
}

int ThreadCount(std::int64_t jobs) {
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("ADALAB_THREADS")) {
    const int requested = std::atoi(env);
    if (requested > 0) threads = requested;
  }
  return static_cast<int>(std::clamp<std::int64_t>(jobs, 1, threads));
}

void ParallelFor(std::int64_t count,
                 const std::function<void(std::int64_t)>& body) {
  if (count <= 0) return;
  const int threads = ThreadCount(count);
  if (threads == 1) {
    for (std::int64_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::int64_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double CalibrateHoeffdingConstant(const ExperimentConfig& cfg) {
  const HardInstance instance = BuildHardInstance(cfg.eps, cfg.gamma, cfg.n);
  const double derived = DerivedHoeffdingConstant(cfg.noise);
  const std::uint64_t pilot_seed = Mix64(cfg.master_seed ^ kCalibrationSalt);
  for (double c = 1.0 / 64.0; c < derived; c *= 2.0) {
    const std::int64_t k = AttackK(cfg.eps, cfg.gamma, cfg.beta, c);
    if (SuccessRate(cfg, instance, k, pilot_seed, cfg.calibration_trials) >=
        cfg.calibration_target) {
      return c;
    }
  }
  return derived;
}

double ResolveHoeffdingConstant(const ExperimentConfig& cfg) {
  if (cfg.hoeffding_c == "derived") return DerivedHoeffdingConstant(cfg.noise);
  if (cfg.hoeffding_c == "calibrate") return CalibrateHoeffdingConstant(cfg);
  return ParseDouble("hoeffding_c", cfg.hoeffding_c);
}

ExperimentOutput RunExperiment(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentOutput out;
  switch (cfg.kind) {
    case ExperimentKind::kAttack:
      out = RunAttack(cfg);
      break;
    case ExperimentKind::kSimpleAttack:
      out = RunSimpleAttack(cfg);
      break;
    case ExperimentKind::kPositiveAccuracy:
      out = RunPositiveAccuracy(cfg);
      break;
    case ExperimentKind::kCoupling:
      out = RunCoupling(cfg);
      break;
    case ExperimentKind::kLlr:
      out = RunLlr(cfg);
      break;
    case ExperimentKind::kDivergence:
      out = RunDivergence(cfg);
      break;
    case ExperimentKind::kBoundsTable:
      out = RunBoundsTable(cfg);
      break;
  }
  const std::chrono::duration<double> elapsed =
      std::chrono::steady_clock::now() - start;
  out.summary["kind"] = ExperimentKindName(cfg.kind);
  out.summary["trials"] = cfg.trials;
  out.summary["master_seed"] = cfg.master_seed;
  out.summary["errors"] = out.errors;
  out.summary["wall_clock_seconds"] = elapsed.count();
  json checks = json::array();
  for (const AssertionResult& a : out.assertions) {
    checks.push_back({{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  }
  out.summary["assertions"] = checks;
  return out;
}

void WriteOutputs(const ExperimentOutput& output, const std::string& path) {
  if (EndsWith(path, ".csv")) {
    std::set<std::string> columns;
    for (const json& r : output.trials) {
      for (auto it = r.begin(); it != r.end(); ++it) columns.insert(it.key());
    }
    std::vector<std::string> ordered;
    if (columns.erase("trial")) ordered.push_back("trial");
    ordered.insert(ordered.end(), columns.begin(), columns.end());
    std::ofstream os = OpenOutput(path);
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      os << (i ? "," : "") << ordered[i];
    }
    os << "\n";
    for (const json& r : output.trials) {
      for (std::size_t i = 0; i < ordered.size(); ++i) {
        os << (i ? "," : "");
        if (r.contains(ordered[i])) os << CsvField(r[ordered[i]]);
      }
      os << "\n";
    }
  } else if (EndsWith(path, ".json")) {
    std::ofstream os = OpenOutput(path);
    os << json{{"summary", output.summary}, {"trials", output.trials}}.dump(2) << "\n";
  } else {
    std::ofstream os = OpenOutput(path);
    for (const json& r : output.trials) os << r.dump() << "\n";
  }

  const std::string stem = Stem(path);
  std::ofstream summary_json = OpenOutput(stem + ".summary.json");
  summary_json << output.summary.dump(2) << "\n";
  std::vector<std::pair<std::string, json>> rows;
  Flatten(output.summary, "", rows);
  std::ofstream summary_csv = OpenOutput(stem + ".summary.csv");
  summary_csv << "key,value\n";
  for (const auto& [key, value] : rows) {
    summary_csv << key << "," << CsvField(value.is_array() ? json(value.dump()) : value)
                << "\n";
  }
}

}  // namespace adalab
