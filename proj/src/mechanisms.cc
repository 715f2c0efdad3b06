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
#include <optional>
#include <stdexcept>
#include <utility>

namespace adalab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Upper tail Pr[eta >= t] for t >= 0.
double UpperTail(const NoiseSpec& spec, double t) {
  if (spec.family == NoiseFamily::kLaplace) {
    return 0.5 * std::exp(-t / spec.scale);
  }
  return 0.5 * std::erfc(t / (spec.scale * std::numbers::sqrt2));
}

// Pr[a <= eta < c] for 0 <= a <= c.
double UpperBand(const NoiseSpec& spec, double a, double c) {
  if (spec.family == NoiseFamily::kLaplace) {
    if (a == kInf) return 0.0;
    return 0.5 * std::exp(-a / spec.scale) * -std::expm1(-(c - a) / spec.scale);
  }
  return UpperTail(spec, a) - UpperTail(spec, c);
}

}  // namespace

std::string NoiseFamilyName(NoiseFamily family) {
  return family == NoiseFamily::kLaplace ? "laplace" : "gaussian";
}

NoiseFamily ParseNoiseFamily(const std::string& name) {
  if (name == "laplace") return NoiseFamily::kLaplace;
  if (name == "gaussian") return NoiseFamily::kGaussian;
  throw ConfigError("unknown noise family '" + name + "'");
}

void NoiseSpec::Validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw ConfigError("noise scale must be finite and non-negative");
  }
  if (!(clip_lo < 0.0 && clip_hi > 1.0)) {
    throw ConfigError("clip interval must satisfy clip_lo < 0 < 1 < clip_hi");
  }
  if (!(grid_step > 0.0)) throw ConfigError("grid_step must be positive");
  const double bins = (clip_hi - clip_lo) / grid_step;
  if (std::abs(bins - std::round(bins)) > 1e-9 * std::max(1.0, bins)) {
    throw ConfigError("grid_step must divide the clip interval evenly");
  }
}

std::int64_t NoiseSpec::num_bins() const {
  return static_cast<std::int64_t>(std::llround((clip_hi - clip_lo) / grid_step));
}

double ClipTailMass(const NoiseSpec& spec) {
  if (spec.scale == 0.0) return 0.0;
  return UpperTail(spec, -spec.clip_lo) + UpperTail(spec, spec.clip_hi - 1.0);
}

double NoiseCdf(const NoiseSpec& spec, double x) {
  if (spec.scale == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  return x < 0.0 ? UpperTail(spec, -x) : 1.0 - UpperTail(spec, x);
}

double IntervalMass(const NoiseSpec& spec, double center, double lo,
                    double hi) {
  if (!(lo < hi)) return 0.0;
  if (spec.scale == 0.0) return (center >= lo && center < hi) ? 1.0 : 0.0;
  const double a = lo - center;
  const double c = hi - center;
  if (a >= 0.0) return UpperBand(spec, a, c);
  if (c <= 0.0) return UpperBand(spec, -c, -a);
  return 1.0 - UpperTail(spec, -a) - UpperTail(spec, c);
}

double OutputMass(const NoiseSpec& spec, double center, std::int64_t index) {
  const std::int64_t bins = spec.num_bins();
  if (index < 0 || index > bins) return 0.0;
  const double half = 0.5 * spec.grid_step;
  const double lo = index == 0 ? -kInf : spec.GridPoint(index) - half;
  const double hi = index == bins ? kInf : spec.GridPoint(index) + half;
  return IntervalMass(spec, center, lo, hi);
}

std::vector<double> OutputDistribution(const NoiseSpec& spec, double center) {
  spec.Validate();
  const std::int64_t bins = spec.num_bins();
  std::vector<double> masses(static_cast<std::size_t>(bins + 1));
  for (std::int64_t i = 0; i <= bins; ++i) {
    masses[static_cast<std::size_t>(i)] = OutputMass(spec, center, i);
  }
  return masses;
}

std::int64_t GridIndex(const NoiseSpec& spec, double answer) {
  if (!OnGrid(spec, answer)) {
    throw std::invalid_argument("answer is not an output grid point");
  }
  return static_cast<std::int64_t>(
      std::nearbyint((answer - spec.clip_lo) / spec.grid_step));
}

double Quantize(const NoiseSpec& spec, double v) {
  if (std::isnan(v)) throw std::invalid_argument("Quantize: NaN input");
  const double clamped = std::clamp(v, spec.clip_lo, spec.clip_hi);
  // nearbyint follows the default round-half-to-even mode.
  double index = std::nearbyint((clamped - spec.clip_lo) / spec.grid_step);
  index = std::clamp(index, 0.0, static_cast<double>(spec.num_bins()));
  return spec.GridPoint(static_cast<std::int64_t>(index));
}

bool OnGrid(const NoiseSpec& spec, double v) {
  if (!(v >= spec.clip_lo && v <= spec.clip_hi)) return false;
  const auto index = static_cast<std::int64_t>(
      std::nearbyint((v - spec.clip_lo) / spec.grid_step));
  return spec.GridPoint(index) == v;
}

MechanismKind MechanismKind::Hybrid(double epsilon_switch) {
  if (!(epsilon_switch > 0.0)) {
    throw ConfigError("hybrid epsilon_switch must be positive");
  }
  return {MechanismType::kHybrid, epsilon_switch};
}

NoiseStreams NoiseStreams::ForTrial(std::uint64_t master_seed,
                                    std::uint64_t trial) {
  return {DeriveSeed(master_seed, trial, StreamLabel::kMechNoiseReal),
          DeriveSeed(master_seed, trial, StreamLabel::kMechNoiseOracle)};
}

Mechanism::Mechanism(MechanismKind kind, NoiseSpec noise, Sample sample,
                     std::shared_ptr<const FiniteDistribution> distribution,
                     NoiseStreams streams)
    : kind_(kind),
      noise_(noise),
      sample_(std::move(sample)),
      distribution_(std::move(distribution)),
      streams_(streams) {
  noise_.Validate();
  if (kind_.type != MechanismType::kReal && distribution_ == nullptr) {
    throw ConfigError(MechanismTypeName(kind_.type) +
                      " mechanism requires a distribution");
  }
  if (kind_.type == MechanismType::kHybrid && !(kind_.epsilon_switch > 0.0)) {
    throw ConfigError("hybrid epsilon_switch must be positive");
  }
}

std::pair<double, AnswerMode> Mechanism::NextCenter(const Query& q) const {
  switch (kind_.type) {
    case MechanismType::kReal:
      return {EmpiricalMean(q, sample_), AnswerMode::kReal};
    case MechanismType::kOracle:
      return {TrueMean(q, *distribution_), AnswerMode::kOracle};
    case MechanismType::kHybrid:
      break;
  }
  const double truth = TrueMean(q, *distribution_);
  if (!switched_) {
    const double empirical = EmpiricalMean(q, sample_);
    if (std::abs(empirical - truth) <= kind_.epsilon_switch) {
      return {empirical, AnswerMode::kReal};
    }
  }
  return {truth, AnswerMode::kOracle};
}

AnswerDetail Mechanism::AnswerDetailed(const Query& q) {
  const auto round = static_cast<std::uint64_t>(modes_.size());
  const auto [center, mode] = NextCenter(q);
  if (kind_.type == MechanismType::kHybrid && mode == AnswerMode::kOracle) {
    switched_ = true;
  }
  CounterRng gen(mode == AnswerMode::kReal ? streams_.real_key
                                           : streams_.oracle_key,
                 round);
  const double eta = SampleNoise(noise_, gen);
  modes_.push_back(mode);
  return {Quantize(noise_, center + eta), eta, center, mode};
}

Transcript RunInteraction(Analyst& analyst, Mechanism& mechanism,
                          std::int64_t k) {
  Transcript transcript;
  transcript.mechanism = MechanismTypeName(mechanism.kind().type);
  transcript.seed = mechanism.streams().real_key;
  transcript.rounds.reserve(static_cast<std::size_t>(std::max<std::int64_t>(k, 0)));
  for (std::int64_t i = 0; i < k; ++i) {
    std::optional<Query> query;
    try {
      query.emplace(analyst.NextQuery(transcript));
    } catch (const std::exception& e) {
      throw std::runtime_error("analyst produced an invalid query at round " +
                               std::to_string(i) + ": " + e.what());
    }
    const double answer = mechanism.Answer(*query);
    transcript.rounds.push_back({std::move(*query), answer});
  }
  return transcript;
}

}  // namespace adalab
