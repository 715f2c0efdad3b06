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

// Exact divergences between the answer distributions of two mechanisms, and
// the transcript log-likelihood-ratio experiment for k adaptive rounds.

#ifndef ADALAB_DIVERGENCE_H_
#define ADALAB_DIVERGENCE_H_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "adalab/core.h"
#include "adalab/mechanisms.h"

namespace adalab {

struct DivergenceReport {
  double max_div_ab = 0.0;
  double max_div_ba = 0.0;
  double kl_ab = 0.0;
  double kl_ba = 0.0;
};

// Divergences between two distributions over the same outcomes. A bin with
// mass under one side and none under the other yields +infinity.
DivergenceReport DivergenceBetween(std::span<const double> a,
                                   std::span<const double> b);

// Answer distribution of the next round of `mechanism` on q.
std::vector<double> NextAnswerDistribution(const Mechanism& mechanism,
                                           const Query& q);

// Divergences between the next answers of two mechanisms with the same noise
// grid.
DivergenceReport DiagnoseDivergence(const Mechanism& a, const Mechanism& b,
                                    const Query& q);

// Asks `high` after an answer >= threshold and `low` otherwise; `high` on
// the first round.
class ThresholdAnalyst : public Analyst {
 public:
  ThresholdAnalyst(Query high, Query low, double threshold);

  Query NextQuery(const Transcript& prefix) override;
  bool IsDeterministic() const override { return true; }

 private:
  Query high_;
  Query low_;
  double threshold_;
};

struct LlrSetup {
  NoiseSpec noise;
  Sample sample{std::vector<Element>{0}};
  std::shared_ptr<const FiniteDistribution> distribution;
  std::int64_t k = 0;
  // Concentration radius; also the hybrid switch threshold.
  double eps = 0.0;
  double rho = 0.05;
  std::int64_t trials = 0;
  std::uint64_t master_seed = 0;
};

struct LlrDirection {
  std::int64_t trials = 0;
  std::int64_t exceed_count = 0;
  double mean_llr = 0.0;
  double max_llr = 0.0;
  // Per-trial log-likelihood ratios in trial order.
  std::vector<double> llrs;
  double exceed_fraction() const {
    return trials == 0 ? 0.0
                       : static_cast<double>(exceed_count) /
                             static_cast<double>(trials);
  }
};

struct LlrResult {
  double eps_star = 0.0;
  // Transcripts drawn from the hybrid mechanism, ln(P_H / P_O).
  LlrDirection hybrid_over_oracle;
  // Transcripts drawn from the oracle mechanism, ln(P_O / P_H).
  LlrDirection oracle_over_hybrid;
};

// Samples `trials` transcripts from each of the hybrid and oracle mechanisms
// and computes the exact transcript log-likelihood ratio as a sum of per-round
// log ratios. Requires a deterministic analyst and at most 64 grid intervals.
LlrResult CompositionLlrExperiment(Analyst& analyst, const LlrSetup& setup);

}  // namespace adalab

#endif  // ADALAB_DIVERGENCE_H_
