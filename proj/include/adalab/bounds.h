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

// Closed-form calculators for the accuracy guarantee of noise addition under
// concentrated queries and for the round counts that break it.

#ifndef ADALAB_BOUNDS_H_
#define ADALAB_BOUNDS_H_

#include <cstdint>
#include <string>

namespace adalab {

// sqrt(2k ln(1/rho)) * eps/b + k * (eps/b) * (e^{eps/b} - 1).
double EpsilonStar(std::int64_t k, double eps, double b, double rho);

// 1 - (1 - e^{-alpha/b})^k: chance that one of k Laplace(b) draws exceeds
// alpha in magnitude. Uses the unclipped noise.
double Zeta(std::int64_t k, double alpha, double b);

struct PositiveParams {
  double eps = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  double b = 0.0;
  std::int64_t k = 0;

  // Throws ConfigError when a field is outside its range.
  void Validate() const;
};

// e^{-eps*} (1 - k gamma - zeta - rho), floored at 0; exactly 1 when k = 0.
double AccuracyLowerBound(const PositiveParams& p);

// b = alpha / (2 ln(1/eps)).
double PositiveNoiseScale(double eps, double alpha);

// Fractions of beta granted to each failure term; they should sum to <= 1.
struct FailureBudget {
  double rho = 0.25;
  double zeta = 0.25;
  double k_gamma = 0.25;
  double eps_star = 0.25;
};

struct PositiveKResult {
  std::int64_t k = 0;
  double b = 0.0;
  double rho = 0.0;
  double lower_bound = 1.0;
  // Names the constraint that stops k + 1, or why no k >= 1 is feasible.
  std::string diagnostic;
};

// Largest k for which every budgeted term stays within its share of beta and
// AccuracyLowerBound >= 1 - beta, with rho = budget.rho * beta and b from
// PositiveNoiseScale. Returns k = 0 with a diagnostic when k = 1 already
// fails.
PositiveKResult PositiveK(double eps, double gamma, double alpha, double beta,
                          const FailureBudget& budget = {});

// ceil(C r^2 ln(N / (r beta))) for the hard instance built at (eps, gamma),
// floored at 0.
std::int64_t AttackK(double eps, double gamma, double beta, double c);

// min(ceil(1/gamma), AttackK(eps, gamma, beta, c)).
std::int64_t NegativeK(double eps, double gamma, double beta, double c);

}  // namespace adalab

#endif  // ADALAB_BOUNDS_H_
