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

#include "adalab/divergence.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "adalab/bounds.h"

namespace adalab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kMaxLlrBins = 64;

// ln(p/q) with the conventions 0/0 -> skipped by callers, p/0 -> +inf.
double LogRatio(double p, double q) {
  if (q == 0.0) return kInf;
  if (p == 0.0) return -kInf;
  return std::log(p) - std::log(q);
}

void Accumulate(std::span<const double> p, std::span<const double> q,
                double& max_div, double& kl) {
  max_div = -kInf;
  kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0 && q[i] == 0.0) continue;
    const double lr = LogRatio(p[i], q[i]);
    max_div = std::max(max_div, lr);
    if (p[i] > 0.0) kl += p[i] * lr;
  }
  if (max_div == -kInf) max_div = 0.0;
}

void RunDirection(Analyst& analyst, const LlrSetup& setup, bool from_hybrid,
                  double eps_star, LlrDirection& out) {
  const MechanismKind hybrid_kind = MechanismKind::Hybrid(setup.eps);
  double llr_sum = 0.0;
  for (std::int64_t trial = 0; trial < setup.trials; ++trial) {
    const NoiseStreams streams =
        NoiseStreams::ForTrial(setup.master_seed, static_cast<std::uint64_t>(trial));
    // The sampling mechanism draws the answers; the shadow only tracks the
    // other side's per-round probabilities.
    Mechanism hybrid(hybrid_kind, setup.noise, setup.sample,
                     setup.distribution, streams);
    Mechanism oracle(MechanismKind::Oracle(), setup.noise, setup.sample,
                     setup.distribution, streams);
    Mechanism& sampler = from_hybrid ? hybrid : oracle;
    Mechanism& shadow = from_hybrid ? oracle : hybrid;

    Transcript transcript;
    double llr = 0.0;
    for (std::int64_t i = 0; i < setup.k; ++i) {
      Query q = analyst.NextQuery(transcript);
      const double center_sampler = sampler.NextCenter(q).first;
      const double center_shadow = shadow.NextCenter(q).first;
      const double answer = sampler.Answer(q);
      shadow.Answer(q);
      const std::int64_t index = GridIndex(setup.noise, answer);
      llr += LogRatio(OutputMass(setup.noise, center_sampler, index),
                      OutputMass(setup.noise, center_shadow, index));
      transcript.rounds.push_back({std::move(q), answer});
    }
    ++out.trials;
    out.llrs.push_back(llr);
    if (llr > eps_star) ++out.exceed_count;
    out.max_llr = trial == 0 ? llr : std::max(out.max_llr, llr);
    llr_sum += llr;
  }
  out.mean_llr = out.trials == 0 ? 0.0 : llr_sum / static_cast<double>(out.trials);
}

}  // namespace

DivergenceReport DivergenceBetween(std::span<const double> a,
                                   std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("DivergenceBetween: size mismatch");
  }
  DivergenceReport report;
  Accumulate(a, b, report.max_div_ab, report.kl_ab);
  Accumulate(b, a, report.max_div_ba, report.kl_ba);
  return report;
}

std::vector<double> NextAnswerDistribution(const Mechanism& mechanism,
                                           const Query& q) {
  return OutputDistribution(mechanism.noise(), mechanism.NextCenter(q).first);
}

DivergenceReport DiagnoseDivergence(const Mechanism& a, const Mechanism& b,
                                    const Query& q) {
  const NoiseSpec& na = a.noise();
  const NoiseSpec& nb = b.noise();
  if (na.clip_lo != nb.clip_lo || na.clip_hi != nb.clip_hi ||
      na.grid_step != nb.grid_step) {
    throw ConfigError("mechanisms must share the output grid");
  }
  const std::vector<double> pa = NextAnswerDistribution(a, q);
  const std::vector<double> pb = NextAnswerDistribution(b, q);
  return DivergenceBetween(pa, pb);
}

ThresholdAnalyst::ThresholdAnalyst(Query high, Query low, double threshold)
    : high_(std::move(high)), low_(std::move(low)), threshold_(threshold) {}

Query ThresholdAnalyst::NextQuery(const Transcript& prefix) {
  if (prefix.empty() || prefix.rounds.back().answer >= threshold_) return high_;
  return low_;
}

LlrResult CompositionLlrExperiment(Analyst& analyst, const LlrSetup& setup) {
  if (!analyst.IsDeterministic()) {
    throw ConfigError("the LLR experiment requires a deterministic analyst");
  }
  setup.noise.Validate();
  if (setup.noise.num_bins() > kMaxLlrBins) {
    throw ConfigError("the LLR experiment needs at most 64 grid intervals");
  }
  if (!(setup.noise.scale > 0.0)) {
    throw ConfigError("the LLR experiment needs a positive noise scale");
  }
  if (setup.distribution == nullptr) {
    throw ConfigError("the LLR experiment requires a distribution");
  }
  if (setup.k < 0 || setup.trials < 0) {
    throw ConfigError("k and trials must be non-negative");
  }
  LlrResult result;
  result.eps_star = EpsilonStar(setup.k, setup.eps, setup.noise.scale, setup.rho);
  RunDirection(analyst, setup, true, result.eps_star, result.hybrid_over_oracle);
  RunDirection(analyst, setup, false, result.eps_star, result.oracle_over_hybrid);
  return result;
}

}  // namespace adalab
