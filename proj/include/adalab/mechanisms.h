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

// Noise-addition mechanisms over a finite output grid.
//
// Three answer rules share one implementation:
//   real    quantize(q(S) + eta_i)
//   oracle  quantize(q(D) + eta'_i)
//   hybrid  the real rule while every query so far had |q(S) - q(D)| <= eps,
//           the oracle rule from the first violating query onwards.
//
// eta_i is drawn from the real-noise stream and eta'_i from the oracle-noise
// stream, both keyed by the round index i. A real and a hybrid mechanism built
// with the same streams therefore see identical noise on every round answered
// in real mode.

#ifndef ADALAB_MECHANISMS_H_
#define ADALAB_MECHANISMS_H_

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "adalab/core.h"
#include "adalab/rng.h"

namespace adalab {

enum class NoiseFamily { kLaplace, kGaussian };

std::string NoiseFamilyName(NoiseFamily family);
NoiseFamily ParseNoiseFamily(const std::string& name);

inline constexpr double kDefaultGridStep = 0x1.0p-20;

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::kLaplace;
  // Laplace scale b, or the standard deviation for Gaussian noise. Zero gives
  // a noiseless mechanism.
  double scale = 0.1;
  double clip_lo = -0.5;
  double clip_hi = 1.5;
  double grid_step = kDefaultGridStep;

  // Throws ConfigError unless scale >= 0, clip_lo < 0 < 1 < clip_hi and
  // grid_step splits the clip interval into an integral number of bins.
  void Validate() const;

  // Number of grid intervals; the output set has num_bins() + 1 points.
  std::int64_t num_bins() const;
  double GridPoint(std::int64_t index) const { return clip_lo + index * grid_step; }
};

// Largest probability, over true values v in [0,1], that v + eta falls outside
// the clip interval: Pr[eta < clip_lo] + Pr[eta > clip_hi - 1].
double ClipTailMass(const NoiseSpec& spec);

// Pr[eta <= x] for the continuous noise family.
double NoiseCdf(const NoiseSpec& spec, double x);

// Pr[lo <= center + eta < hi], evaluated without cancellation in the tails.
double IntervalMass(const NoiseSpec& spec, double center, double lo, double hi);

// Exact probability of each output grid point for the answer
// quantize(center + eta), indexed like NoiseSpec::GridPoint.
std::vector<double> OutputDistribution(const NoiseSpec& spec, double center);

// Probability of the single grid point `index`, matching OutputDistribution.
double OutputMass(const NoiseSpec& spec, double center, std::int64_t index);

// Grid index of an on-grid answer.
std::int64_t GridIndex(const NoiseSpec& spec, double answer);

// One draw of the continuous noise, before clipping and rounding.
template <typename Urbg>
double SampleNoise(const NoiseSpec& spec, Urbg& gen) {
  static_assert(Urbg::min() == 0 && Urbg::max() == ~std::uint64_t{0},
                "SampleNoise needs a full-range 64-bit generator");
  if (spec.scale == 0.0) return 0.0;
  if (spec.family == NoiseFamily::kLaplace) {
    const double u = OpenUnit(gen());
    return u < 0.5 ? spec.scale * std::log(2.0 * u)
                   : -spec.scale * std::log(2.0 * (1.0 - u));
  }
  const double u1 = OpenUnit(gen());
  const double u2 = OpenUnit(gen());
  return spec.scale * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Clamps v into [clip_lo, clip_hi] and rounds to the nearest grid point, ties
// to the even grid index. Throws std::invalid_argument on NaN.
double Quantize(const NoiseSpec& spec, double v);

// True when v is exactly one of the grid points.
bool OnGrid(const NoiseSpec& spec, double v);

struct MechanismKind {
  MechanismType type = MechanismType::kReal;
  double epsilon_switch = 0.0;  // Hybrid only.

  static MechanismKind Real() { return {MechanismType::kReal, 0.0}; }
  static MechanismKind Oracle() { return {MechanismType::kOracle, 0.0}; }
  static MechanismKind Hybrid(double epsilon_switch);
};

struct NoiseStreams {
  std::uint64_t real_key = 0;
  std::uint64_t oracle_key = 0;

  static NoiseStreams ForTrial(std::uint64_t master_seed, std::uint64_t trial);
};

enum class AnswerMode { kReal, kOracle };

struct AnswerDetail {
  double answer;
  double noise;   // The raw draw that was added.
  double center;  // q(S) or q(D), whichever the branch used.
  AnswerMode mode;
};

// Single-owner mechanism state for one interaction.
class Mechanism {
 public:
  // The distribution may be null for the real mechanism only.
  Mechanism(MechanismKind kind, NoiseSpec noise, Sample sample,
            std::shared_ptr<const FiniteDistribution> distribution,
            NoiseStreams streams);

  AnswerDetail AnswerDetailed(const Query& q);

  // Center and branch the next answer to q would use, without consuming a
  // round or changing the switch state.
  std::pair<double, AnswerMode> NextCenter(const Query& q) const;
  double Answer(const Query& q) { return AnswerDetailed(q).answer; }

  const MechanismKind& kind() const { return kind_; }
  const NoiseSpec& noise() const { return noise_; }
  const NoiseStreams& streams() const { return streams_; }
  const Sample& sample() const { return sample_; }
  const FiniteDistribution* distribution() const { return distribution_.get(); }
  bool switched() const { return switched_; }
  std::int64_t rounds() const { return static_cast<std::int64_t>(modes_.size()); }
  // Branch taken on each round so far.
  const std::vector<AnswerMode>& modes() const { return modes_; }

 private:
  MechanismKind kind_;
  NoiseSpec noise_;
  Sample sample_;
  std::shared_ptr<const FiniteDistribution> distribution_;
  NoiseStreams streams_;
  bool switched_ = false;
  std::vector<AnswerMode> modes_;
};

class Analyst {
 public:
  virtual ~Analyst() = default;

  // The query for the next round; `prefix` holds every earlier round.
  virtual Query NextQuery(const Transcript& prefix) = 0;

  // Deterministic analysts are pure functions of the prefix and may be reused
  // across interactions.
  virtual bool IsDeterministic() const { return false; }
};

// Runs k rounds. Errors raised while the analyst builds a query are rethrown
// as std::runtime_error naming the round.
Transcript RunInteraction(Analyst& analyst, Mechanism& mechanism,
                          std::int64_t k);

}  // namespace adalab

#endif  // ADALAB_MECHANISMS_H_
