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

#include "adalab/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

#include "adalab/attack.h"

namespace adalab {
namespace {

using ::testing::HasSubstr;

NoiseSpec Laplace(double b, double grid = kDefaultGridStep) {
  NoiseSpec spec;
  spec.family = NoiseFamily::kLaplace;
  spec.scale = b;
  spec.grid_step = grid;
  return spec;
}

// Two equally likely one-element samples (0) and (1).
std::shared_ptr<const FiniteDistribution> TwoPoint() {
  return std::make_shared<const FiniteDistribution>(FiniteDistribution::Explicit(
      {{Sample({0}), 0.5}, {Sample({1}), 0.5}}));
}

// Issues a fixed list of queries in order.
class ScriptedAnalyst : public Analyst {
 public:
  explicit ScriptedAnalyst(std::vector<Query> script) : script_(std::move(script)) {}
  Query NextQuery(const Transcript& prefix) override {
    return script_.at(prefix.size());
  }
  bool IsDeterministic() const override { return true; }

 private:
  std::vector<Query> script_;
};

TEST(SampleNoiseTest, ZeroScaleIsNoiseless) {
  Rng rng(1);
  EXPECT_EQ(SampleNoise(Laplace(0.0), rng), 0.0);
}

TEST(SampleNoiseTest, LaplaceMeanWithinCltRadius) {
  const NoiseSpec spec = Laplace(0.1);
  Rng rng(2024);
  constexpr int kDraws = 1000000;
  double sum = 0.0;
  int inside = 0;
  for (int i = 0; i < kDraws; ++i) {
    const double eta = SampleNoise(spec, rng);
    sum += eta;
    if (std::abs(eta) <= 0.3) ++inside;
  }
  EXPECT_NEAR(sum / kDraws, 0.0, 3.0 * 0.1 * std::sqrt(2.0) / 1e3);
  // Pr[|eta| <= a] = 1 - exp(-a / b) for Laplace noise.
  EXPECT_NEAR(static_cast<double>(inside) / kDraws, 1.0 - std::exp(-3.0), 0.001);
}

TEST(SampleNoiseTest, GaussianMoments) {
  NoiseSpec spec = Laplace(0.2);
  spec.family = NoiseFamily::kGaussian;
  CounterRng gen(5, 0);
  constexpr int kDraws = 400000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double eta = SampleNoise(spec, gen);
    sum += eta;
    sum_sq += eta * eta;
  }
  EXPECT_NEAR(sum / kDraws, 0.0, 4.0 * 0.2 / std::sqrt(kDraws));
  // Var of eta^2 is 2 sigma^4.
  EXPECT_NEAR(sum_sq / kDraws, 0.04, 4.0 * std::sqrt(2.0) * 0.04 / std::sqrt(kDraws));
}

TEST(NoiseCdfTest, MatchesClosedForms) {
  const NoiseSpec lap = Laplace(0.1);
  for (double x : {-0.7, -0.1, 0.0, 0.05, 0.3, 1.2}) {
    const double expected =
        x < 0 ? 0.5 * std::exp(x / 0.1) : 1.0 - 0.5 * std::exp(-x / 0.1);
    EXPECT_NEAR(NoiseCdf(lap, x), expected, 1e-15) << x;
  }
  NoiseSpec gauss = Laplace(0.1);
  gauss.family = NoiseFamily::kGaussian;
  for (double x : {-0.4, -0.1, 0.0, 0.2, 0.5}) {
    EXPECT_NEAR(NoiseCdf(gauss, x), 0.5 * std::erfc(-x / (0.1 * std::sqrt(2.0))), 1e-14)
        << x;
  }
}

TEST(NoiseSpecTest, ValidationErrors) {
  NoiseSpec spec = Laplace(0.1);
  EXPECT_NO_THROW(spec.Validate());
  EXPECT_EQ(spec.num_bins(), 2 * (1 << 20));
  spec.scale = -1.0;
  EXPECT_THROW(spec.Validate(), ConfigError);
  spec = Laplace(0.1, 0.3);
  EXPECT_THROW(spec.Validate(), ConfigError);
  spec = Laplace(0.1);
  spec.clip_hi = 0.9;
  EXPECT_THROW(spec.Validate(), ConfigError);
  EXPECT_THROW(ParseNoiseFamily("cauchy"), ConfigError);
  EXPECT_EQ(ParseNoiseFamily(NoiseFamilyName(NoiseFamily::kGaussian)),
            NoiseFamily::kGaussian);
}

TEST(QuantizeTest, Examples) {
  const NoiseSpec spec = Laplace(0.1, 0.001);
  EXPECT_DOUBLE_EQ(Quantize(spec, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(Quantize(spec, 2.3), 1.5);
  EXPECT_DOUBLE_EQ(Quantize(spec, -7.0), -0.5);
  EXPECT_NEAR(Quantize(spec, 0.12345), 0.123, 1e-12);
  EXPECT_TRUE(OnGrid(spec, Quantize(spec, 0.12345)));
  EXPECT_THROW(Quantize(spec, std::numeric_limits<double>::quiet_NaN()),
               std::invalid_argument);
}

TEST(QuantizeTest, TiesGoToEvenBinIndex) {
  const NoiseSpec spec = Laplace(0.1, 0.5);
  EXPECT_DOUBLE_EQ(Quantize(spec, -0.25), -0.5);  // Bin 0.5 -> 0.
  EXPECT_DOUBLE_EQ(Quantize(spec, 0.25), 0.5);    // Bin 1.5 -> 2.
  EXPECT_DOUBLE_EQ(Quantize(spec, 0.75), 0.5);    // Bin 2.5 -> 2.
}

TEST(GridTest, GridIndexInvertsGridPoint) {
  const NoiseSpec spec = Laplace(0.1, 0.125);
  for (std::int64_t i = 0; i <= spec.num_bins(); ++i) {
    EXPECT_EQ(GridIndex(spec, spec.GridPoint(i)), i);
  }
  EXPECT_THROW(GridIndex(spec, 0.1), std::invalid_argument);
  EXPECT_THROW(GridIndex(spec, 2.0), std::invalid_argument);
}

TEST(OutputDistributionTest, SumsToOneAndMatchesOutputMass) {
  for (NoiseFamily family : {NoiseFamily::kLaplace, NoiseFamily::kGaussian}) {
    NoiseSpec spec = Laplace(0.1, 0.125);
    spec.family = family;
    const std::vector<double> masses = OutputDistribution(spec, 0.3);
    EXPECT_NEAR(std::accumulate(masses.begin(), masses.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < masses.size(); ++i) {
      EXPECT_EQ(masses[i], OutputMass(spec, 0.3, static_cast<std::int64_t>(i)));
    }
  }
}

TEST(OutputDistributionTest, MatchesSampledFrequencies) {
  const NoiseSpec spec = Laplace(0.1, 0.125);
  const std::vector<double> masses = OutputDistribution(spec, 0.4);
  std::vector<int> counts(masses.size(), 0);
  Rng rng(77);
  constexpr int kDraws = 200000;
  for (int i = 0; i < kDraws; ++i) {
    ++counts[static_cast<std::size_t>(
        GridIndex(spec, Quantize(spec, 0.4 + SampleNoise(spec, rng))))];
  }
  for (std::size_t i = 0; i < masses.size(); ++i) {
    const double sigma = std::sqrt(masses[i] * (1 - masses[i]) / kDraws);
    EXPECT_NEAR(static_cast<double>(counts[i]) / kDraws, masses[i], 5 * sigma + 1e-5)
        << "bin " << i;
  }
}

TEST(OutputDistributionTest, NoiselessIsPointMass) {
  const NoiseSpec spec = Laplace(0.0, 0.125);
  const std::vector<double> masses = OutputDistribution(spec, 0.25);
  EXPECT_DOUBLE_EQ(masses[static_cast<std::size_t>(GridIndex(spec, 0.25))], 1.0);
  EXPECT_DOUBLE_EQ(std::accumulate(masses.begin(), masses.end(), 0.0), 1.0);
}

TEST(OutputDistributionTest, ShiftedLaplaceBinRatioBounded) {
  // Bins integrate densities whose pointwise ratio is at most exp(delta / b),
  // so each bin ratio obeys the same bound up to rounding.
  const double b = 0.1;
  const NoiseSpec spec = Laplace(b, 0x1.0p-10);
  for (double delta : {0.005, 0.01, 0.02}) {
    const std::vector<double> p = OutputDistribution(spec, 0.5 + delta);
    const std::vector<double> q = OutputDistribution(spec, 0.5);
    const double bound = delta / b + 1e-9;
    for (std::size_t i = 0; i < p.size(); ++i) {
      ASSERT_GT(q[i], 0.0);
      EXPECT_LE(std::abs(std::log(p[i] / q[i])), bound) << "bin " << i;
    }
  }
}

TEST(ClipTailMassTest, LaplaceClosedForm) {
  // Pr[eta < -0.5] + Pr[eta > 0.5] = exp(-5) at b = 0.1.
  EXPECT_NEAR(ClipTailMass(Laplace(0.1)), std::exp(-5.0), 1e-16);
  EXPECT_EQ(ClipTailMass(Laplace(0.0)), 0.0);
}

TEST(MechanismTest, ConfigurationErrors) {
  EXPECT_THROW(Mechanism(MechanismKind::Oracle(), Laplace(0.1), Sample({0}), nullptr, {}),
               ConfigError);
  try {
    Mechanism(MechanismKind::Hybrid(0.1), Laplace(0.1), Sample({0}), nullptr, {});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_THAT(e.what(), HasSubstr("requires a distribution"));
  }
  EXPECT_THROW(MechanismKind::Hybrid(0.0), ConfigError);
  EXPECT_NO_THROW(Mechanism(MechanismKind::Real(), Laplace(0.1), Sample({0}), nullptr, {}));
}

TEST(MechanismTest, OracleAnswerIsQuantizedTrueMeanPlusOracleNoise) {
  const NoiseStreams streams = NoiseStreams::ForTrial(3, 0);
  Mechanism mech(MechanismKind::Oracle(), Laplace(0.1), Sample({0}), TwoPoint(), streams);
  CounterRng gen(streams.oracle_key, 0);
  const double eta = SampleNoise(Laplace(0.1), gen);
  const AnswerDetail detail = mech.AnswerDetailed(Query(0.3));
  EXPECT_EQ(detail.noise, eta);
  EXPECT_EQ(detail.answer, Quantize(Laplace(0.1), 0.3 + eta));
  EXPECT_EQ(detail.mode, AnswerMode::kOracle);
}

TEST(MechanismTest, OracleIgnoresSample) {
  const NoiseStreams streams = NoiseStreams::ForTrial(9, 4);
  std::vector<Query> script;
  for (int i = 0; i < 10; ++i) script.push_back(Query(0.1 * (i % 3), {{0, 1.0}}));
  ScriptedAnalyst analyst(script);
  Mechanism a(MechanismKind::Oracle(), Laplace(0.1), Sample({0}), TwoPoint(), streams);
  Mechanism b(MechanismKind::Oracle(), Laplace(0.1), Sample({1}), TwoPoint(), streams);
  EXPECT_EQ(RunInteraction(analyst, a, 10).rounds, RunInteraction(analyst, b, 10).rounds);
}

TEST(MechanismTest, HybridSwitchIsPermanentAndModesFormSuffix) {
  const NoiseStreams streams = NoiseStreams::ForTrial(1, 1);
  Mechanism mech(MechanismKind::Hybrid(0.1), Laplace(0.1), Sample({0}), TwoPoint(),
                 streams);
  // |q(S) - q(D)| = 0 for constant queries and 0.5 for the indicator of 0.
  EXPECT_EQ(mech.AnswerDetailed(Query(0.4)).mode, AnswerMode::kReal);
  EXPECT_FALSE(mech.switched());
  const auto [center, mode] = mech.NextCenter(Query(0.0, {{0, 1.0}}));
  EXPECT_EQ(mode, AnswerMode::kOracle);
  EXPECT_DOUBLE_EQ(center, 0.5);
  EXPECT_FALSE(mech.switched());
  EXPECT_EQ(mech.AnswerDetailed(Query(0.0, {{0, 1.0}})).mode, AnswerMode::kOracle);
  EXPECT_TRUE(mech.switched());
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(mech.AnswerDetailed(Query(0.4)).mode, AnswerMode::kOracle);
  }
  const auto& modes = mech.modes();
  const auto first_oracle = std::find(modes.begin(), modes.end(), AnswerMode::kOracle);
  EXPECT_TRUE(std::all_of(first_oracle, modes.end(),
                          [](AnswerMode m) { return m == AnswerMode::kOracle; }));
  EXPECT_EQ(mech.rounds(), 7);
}

TEST(MechanismTest, HybridNeverSwitchesOnAttackInfoQueries) {
  const HardInstance inst = BuildHardInstance(0.25, 0.01, 16);
  const NoiseStreams streams = NoiseStreams::ForTrial(5, 0);
  Mechanism mech(MechanismKind::Hybrid(0.25), Laplace(0.1),
                 inst.distribution->support_sample(13), inst.distribution, streams);
  AttackState state(inst, 200, AttackSeeds::ForTrial(5, 0));
  for (int t = 0; t < 200; ++t) InfoRound(state, mech);
  EXPECT_FALSE(mech.switched());
}

TEST(MechanismTest, RealAndHybridTranscriptsCoincideOnGoodQueries) {
  const HardInstance inst = BuildHardInstance(0.25, 0.01, 16);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const NoiseStreams streams = NoiseStreams::ForTrial(11, trial);
    const Sample s = inst.distribution->support_sample(trial % 100);
    Mechanism real(MechanismKind::Real(), Laplace(0.1), s, nullptr, streams);
    Mechanism hybrid(MechanismKind::Hybrid(0.25), Laplace(0.1), s, inst.distribution,
                     streams);
    Algorithm1Analyst a1(inst, 50, AttackSeeds::ForTrial(11, trial), false);
    Algorithm1Analyst a2(inst, 50, AttackSeeds::ForTrial(11, trial), false);
    const Transcript t1 = RunInteraction(a1, real, 50);
    const Transcript t2 = RunInteraction(a2, hybrid, 50);
    EXPECT_EQ(t1.rounds, t2.rounds);
    for (const TranscriptRound& round : t1.rounds) {
      EXPECT_TRUE(OnGrid(real.noise(), round.answer));
    }
  }
}

TEST(MechanismTest, AnswersAlwaysOnGrid) {
  for (NoiseFamily family : {NoiseFamily::kLaplace, NoiseFamily::kGaussian}) {
    NoiseSpec spec = Laplace(2.0, 0.001);
    spec.family = family;
    Mechanism mech(MechanismKind::Real(), spec, Sample({0, 1}), nullptr,
                   NoiseStreams::ForTrial(2, 2));
    for (int i = 0; i < 2000; ++i) {
      const double a = mech.Answer(Query(0.5, {{0, 1.0}}));
      ASSERT_TRUE(OnGrid(spec, a));
      ASSERT_GE(a, spec.clip_lo);
      ASSERT_LE(a, spec.clip_hi);
    }
  }
}

TEST(RunInteractionTest, ZeroRoundsGiveEmptyTranscript) {
  ScriptedAnalyst analyst({});
  Mechanism mech(MechanismKind::Real(), Laplace(0.1), Sample({0}), nullptr, {});
  const Transcript t = RunInteraction(analyst, mech, 0);
  EXPECT_TRUE(t.empty());
  EXPECT_EQ(t.mechanism, "real");
}

TEST(RunInteractionTest, DeterministicGivenSeeds) {
  std::vector<Query> script(8, Query(0.2, {{0, 0.9}}));
  ScriptedAnalyst analyst(script);
  Mechanism a(MechanismKind::Real(), Laplace(0.1), Sample({0}), nullptr,
              NoiseStreams::ForTrial(4, 4));
  Mechanism b(MechanismKind::Real(), Laplace(0.1), Sample({0}), nullptr,
              NoiseStreams::ForTrial(4, 4));
  EXPECT_EQ(RunInteraction(analyst, a, 8).rounds, RunInteraction(analyst, b, 8).rounds);
}

TEST(RunInteractionTest, AnalystErrorsNameTheRound) {
  ScriptedAnalyst analyst({Query(0.1), Query(0.2)});
  Mechanism mech(MechanismKind::Real(), Laplace(0.1), Sample({0}), nullptr, {});
  try {
    RunInteraction(analyst, mech, 3);
    FAIL() << "expected runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_THAT(e.what(), HasSubstr("round 2"));
  }
}

}  // namespace
}  // namespace adalab
