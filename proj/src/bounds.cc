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

#include "adalab/bounds.h"

#include <algorithm>
#include <cmath>

#include "adalab/attack.h"
#include "adalab/core.h"

namespace adalab {
namespace {

constexpr std::int64_t kSearchCap = std::int64_t{1} << 62;
constexpr double kMaxCount = 0x1.0p62;

bool InOpenUnit(double v) { return v > 0.0 && v < 1.0; }

std::int64_t ToCount(double v) {
  if (!(v <= kMaxCount)) throw ConfigError("round count exceeds 2^62");
  return static_cast<std::int64_t>(v);
}

// Returns an empty string when k satisfies every constraint, otherwise the
// name of the first one it breaks.
std::string Violation(std::int64_t k, double eps, double gamma, double alpha,
                      double beta, double b, const FailureBudget& budget) {
  const double rho = budget.rho * beta;
  if (static_cast<double>(k) * gamma > budget.k_gamma * beta) return "k*gamma";
  if (Zeta(k, alpha, b) > budget.zeta * beta) return "zeta";
  if (EpsilonStar(k, eps, b, rho) > budget.eps_star * beta) return "eps_star";
  const PositiveParams p{eps, gamma, alpha, beta, rho, b, k};
  if (AccuracyLowerBound(p) < 1.0 - beta) return "accuracy_lower_bound";
  return "";
}

}  // namespace

double EpsilonStar(std::int64_t k, double eps, double b, double rho) {
  if (k < 0 || !(eps > 0.0) || !(b > 0.0) || !InOpenUnit(rho)) {
    throw ConfigError("EpsilonStar: need k >= 0, eps > 0, b > 0, rho in (0,1)");
  }
  const double kd = static_cast<double>(k);
  const double ratio = eps / b;
  return std::sqrt(2.0 * kd * std::log(1.0 / rho)) * ratio +
         kd * ratio * std::expm1(ratio);
}

double Zeta(std::int64_t k, double alpha, double b) {
  if (k < 0 || !(alpha > 0.0) || !(b > 0.0)) {
    throw ConfigError("Zeta: need k >= 0, alpha > 0, b > 0");
  }
  if (k == 0) return 0.0;
  const double tail = std::exp(-alpha / b);
  return -std::expm1(static_cast<double>(k) * std::log1p(-tail));
}

void PositiveParams::Validate() const {
  if (!InOpenUnit(eps) || !InOpenUnit(gamma) || !InOpenUnit(alpha) ||
      !InOpenUnit(beta) || !InOpenUnit(rho)) {
    throw ConfigError("eps, gamma, alpha, beta and rho must lie in (0,1)");
  }
  if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("b must be positive");
  if (k < 0) throw ConfigError("k must be non-negative");
}

double AccuracyLowerBound(const PositiveParams& p) {
  p.Validate();
  if (p.k == 0) return 1.0;
  const double failures = static_cast<double>(p.k) * p.gamma +
                          Zeta(p.k, p.alpha, p.b) + p.rho;
  if (failures >= 1.0) return 0.0;
  return std::exp(-EpsilonStar(p.k, p.eps, p.b, p.rho)) * (1.0 - failures);
}

double PositiveNoiseScale(double eps, double alpha) {
  if (!InOpenUnit(eps) || !(alpha > 0.0)) {
    throw ConfigError("PositiveNoiseScale: need eps in (0,1), alpha > 0");
  }
  return alpha / (2.0 * std::log(1.0 / eps));
}

PositiveKResult PositiveK(double eps, double gamma, double alpha, double beta,
                          const FailureBudget& budget) {
  if (!InOpenUnit(eps) || !InOpenUnit(gamma) || !InOpenUnit(alpha) ||
      !InOpenUnit(beta)) {
    throw ConfigError("PositiveK: eps, gamma, alpha, beta must lie in (0,1)");
  }
  if (!(eps < alpha)) throw ConfigError("PositiveK: requires eps < alpha");
  if (!InOpenUnit(budget.rho * beta) || budget.zeta < 0.0 ||
      budget.k_gamma < 0.0 || budget.eps_star < 0.0) {
    throw ConfigError("PositiveK: invalid failure budget");
  }

  PositiveKResult result;
  result.b = PositiveNoiseScale(eps, alpha);
  result.rho = budget.rho * beta;
  auto violation = [&](std::int64_t k) {
    return Violation(k, eps, gamma, alpha, beta, result.b, budget);
  };

  std::string first = violation(1);
  if (!first.empty()) {
    result.diagnostic = "no feasible k >= 1: " + first + " exceeds its budget at k = 1";
    return result;
  }
  // Every constraint is monotone in k, so the feasible set is a prefix.
  std::int64_t lo = 1;
  std::int64_t hi = 2;
  while (hi < kSearchCap && violation(hi).empty()) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (violation(mid).empty() ? lo : hi) = mid;
  }
  result.k = lo;
  result.lower_bound = AccuracyLowerBound(
      {eps, gamma, alpha, beta, result.rho, result.b, result.k});
  const std::string stop = violation(hi);
  result.diagnostic = stop.empty() ? "search cap reached" : stop + " binds at k + 1";
  return result;
}

std::int64_t AttackK(double eps, double gamma, double beta, double c) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in (0,1]");
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("C must be positive");
  const HardInstanceShape shape = HardInstanceShapeFor(eps, gamma);
  const double r = static_cast<double>(shape.num_blocks);
  // N / (r beta) = m / beta.
  const double value = c * r * r * std::log(shape.block_size / beta);
  if (!(value > 0.0)) return 0;
  return ToCount(std::ceil(value));
}

std::int64_t NegativeK(double eps, double gamma, double beta, double c) {
  const std::int64_t attack = AttackK(eps, gamma, beta, c);
  const double inverse = 1.0 / gamma;
  const double simple = std::ceil(inverse - 1e-9 * std::max(1.0, inverse));
  if (simple >= static_cast<double>(attack)) return attack;
  return static_cast<std::int64_t>(simple);
}

}  // namespace adalab
