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

#ifndef ADALAB_CONCENTRATION_H_
#define ADALAB_CONCENTRATION_H_

#include <cstdint>

#include "adalab/core.h"

namespace adalab {

struct ConcentrationReport {
  bool holds;
  // Probability mass of support samples with |q(S) - q(D)| >= eps.
  double deviation_mass;
  double max_deviation;
  double true_mean;
};

// A query is (eps, gamma)-concentrated w.r.t. d when
// Pr_{S~d}[|q(S) - q(D)| >= eps] <= gamma. Deviations exactly equal to eps
// count toward the mass. Block-repeat distributions are handled column-wise
// in time proportional to the number of overrides.
ConcentrationReport CheckConcentrationExact(const Query& q,
                                            const FiniteDistribution& d,
                                            double eps, double gamma);

// 2 exp(-2 n eps^2), capped at 1.
double HoeffdingGamma(std::int64_t n, double eps);

}  // namespace adalab

#endif  // ADALAB_CONCENTRATION_H_
