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

#include "adalab/attack.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "adalab/concentration.h"

namespace adalab {
namespace {

constexpr double kCeilTolerance = 1e-9;
// Keeps N within exact double range and the block-repeat index arithmetic
// far from overflow.
constexpr double kMaxDomainSize = 0x1.0p52;

double TolerantCeil(double x) {
  return std::ceil(x - kCeilTolerance * std::max(1.0, std::abs(x)));
}

void ValidateUnitParameter(double v, const char* name) {
  if (!(v > 0.0 && v <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in (0, 1]");
  }
}

}  // namespace

HardInstanceShape HardInstanceShapeFor(double eps, double gamma) {
  ValidateUnitParameter(eps, "eps");
  ValidateUnitParameter(gamma, "gamma");
  const double r = TolerantCeil(1.0 / eps);
  const double n_min = std::max(r * r, TolerantCeil(r / gamma));
  const double m = std::ceil(n_min / r);
  return {static_cast<std::int64_t>(r), m, r * m};
}

HardInstance BuildHardInstance(double eps, double gamma, std::int64_t n) {
  const HardInstanceShape shape = HardInstanceShapeFor(eps, gamma);
  if (shape.domain_size > kMaxDomainSize) {
    throw ConfigError("hard instance domain too large to materialize");
  }
  const std::int64_t r = shape.num_blocks;
  if (n < r) {
    throw ConfigError("sample too small for 1/eps blocks: n = " +
                      std::to_string(n) + " < r = " + std::to_string(r));
  }
  if (n % r != 0) {
    throw ConfigError("sample size n = " + std::to_string(n) +
                      " is not a multiple of r = " + std::to_string(r));
  }
  PartitionedDomain domain(r, static_cast<std::int64_t>(shape.block_size));
  auto distribution = std::make_shared<const FiniteDistribution>(
      FiniteDistribution::BlockRepeat(domain, n / r));
  return {domain, n, n / r, std::move(distribution), eps, gamma};
}

double DerivedHoeffdingConstant(const NoiseSpec& noise) {
  const double a =
      2.0 * (std::max(std::abs(noise.clip_lo), noise.clip_hi) + 1.0);
  return 72.0 * a * a;
}

AttackSeeds AttackSeeds::ForTrial(std::uint64_t master_seed,
                                  std::uint64_t trial) {
  return {DeriveSeed(master_seed, trial, StreamLabel::kAttackP),
          DeriveSeed(master_seed, trial, StreamLabel::kAttackBernoulli)};
}

AttackState::AttackState(const HardInstance& instance, std::int64_t k,
                         AttackSeeds seeds, std::int64_t candidates)
    : k_(k),
      num_blocks_(instance.num_blocks()),
      p_rng_(seeds.p_seed),
      bernoulli_key_(seeds.bernoulli_seed) {
  if (k < 0) throw ConfigError("attack round count must be non-negative");
  const std::int64_t m = instance.support_size();
  if (candidates < 0 || candidates > m) {
    throw ConfigError("candidate count must lie in [0, m]");
  }
  const auto size = static_cast<std::size_t>(candidates == 0 ? m : candidates);
  scores_.assign(size, 0.0);
  table_.assign(size, 0.0);
  entries_.reserve(size);
}

Query AttackState::PrepareInfoQuery() {
  if (pending_) throw std::logic_error("previous information round unanswered");
  if (rounds_done_ >= k_) throw std::logic_error("all information rounds used");
  p_ = p_rng_.Uniform();
  // p_ is a multiple of 2^-53 below 1, so p_ * 2^64 is an exact
  // integer and the comparison below succeeds with probability exactly p_.
  const auto threshold = static_cast<std::uint64_t>(p_ * 0x1.0p64);
  CounterRng gen(bernoulli_key_, static_cast<std::uint64_t>(rounds_done_));
  entries_.clear();
  for (std::size_t j = 0; j < table_.size(); ++j) {
    const bool one = gen() < threshold;
    table_[j] = one ? 1.0 : 0.0;
    if (one) entries_.emplace_back(static_cast<Element>(j), 1.0);
  }
  pending_ = true;
  return Query(0.0, entries_);
}

void AttackState::RecordAnswer(double answer) {
  if (!pending_) throw std::logic_error("no information round awaiting an answer");
  const double weight = answer - p_ / static_cast<double>(num_blocks_);
  for (std::size_t j = 0; j < table_.size(); ++j) {
    scores_[j] += weight * (table_[j] - p_);
  }
  pending_ = false;
  ++rounds_done_;
}

std::int64_t ArgmaxScore(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("ArgmaxScore: no scores");
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  return static_cast<std::int64_t>(best);
}

double InfoRound(AttackState& state, Mechanism& mechanism) {
  const Query q = state.PrepareInfoQuery();
  const double answer = mechanism.Answer(q);
  state.RecordAnswer(answer);
  return answer;
}

Query FinalQuery(const AttackState& state, const HardInstance& instance) {
  if (state.rounds_done() != state.k() || state.pending()) {
    throw std::logic_error("final query requested before all rounds finished");
  }
  const std::int64_t j_star = ArgmaxScore(state.scores());
  std::vector<Element> support;
  support.reserve(static_cast<std::size_t>(instance.num_blocks()));
  for (std::int64_t i = 0; i < instance.num_blocks(); ++i) {
    support.push_back(instance.domain.Encode(i, j_star));
  }
  return Query::Indicator(support);
}

Algorithm1Result RunAlgorithm1(const HardInstance& instance,
                               Mechanism& mechanism, std::int64_t k,
                               std::int64_t true_index, AttackSeeds seeds,
                               const Algorithm1Options& options) {
  AttackState state(instance, k, seeds, options.candidates);
  Algorithm1Result result;
  if (options.record_transcript) {
    result.transcript.emplace();
    result.transcript->mechanism = MechanismTypeName(mechanism.kind().type);
    result.transcript->seed = mechanism.streams().real_key;
  }
  auto check = [&](const Query& q) {
    if (!options.check_concentration) return;
    ++result.queries_checked;
    if (!CheckConcentrationExact(q, *instance.distribution, instance.eps,
                                 instance.gamma)
             .holds) {
      ++result.concentration_violations;
    }
  };

  for (std::int64_t t = 0; t < k; ++t) {
    Query q = state.PrepareInfoQuery();
    check(q);
    const double answer = mechanism.Answer(q);
    state.RecordAnswer(answer);
    if (result.transcript) result.transcript->rounds.push_back({std::move(q), answer});
  }

  Query final_query = FinalQuery(state, instance);
  check(final_query);
  const AnswerDetail detail = mechanism.AnswerDetailed(final_query);
  const double truth = instance.final_query_true_mean();
  result.j_star = ArgmaxScore(state.scores());
  result.success = result.j_star == true_index;
  result.final_answer = detail.answer;
  result.final_noise = detail.noise;
  result.final_deviation = std::abs(detail.answer - truth);
  result.signal_deviation = std::abs(detail.center - truth);
  if (result.transcript) {
    result.transcript->rounds.push_back({std::move(final_query), detail.answer});
  }
  return result;
}

Algorithm1Analyst::Algorithm1Analyst(const HardInstance& instance,
                                     std::int64_t k, AttackSeeds seeds,
                                     bool final_query, std::int64_t candidates)
    : instance_(&instance),
      state_(instance, k, seeds, candidates),
      final_query_(final_query) {}

Query Algorithm1Analyst::NextQuery(const Transcript& prefix) {
  if (state_.pending()) {
    if (prefix.empty()) throw std::logic_error("transcript lost the last answer");
    state_.RecordAnswer(prefix.rounds.back().answer);
  }
  if (state_.rounds_done() < state_.k()) return state_.PrepareInfoQuery();
  if (final_query_ && !final_issued_) {
    final_issued_ = true;
    return FinalQuery(state_, *instance_);
  }
  throw std::logic_error("attack analyst has no queries left");
}

DisjointBlocksInstance BuildDisjointBlocksInstance(double gamma,
                                                   std::int64_t n) {
  ValidateUnitParameter(gamma, "gamma");
  if (n < 1) throw ConfigError("sample size must be positive");
  const double r_real = TolerantCeil(1.0 / gamma);
  if (r_real * static_cast<double>(n) > 1e8) {
    throw ConfigError("disjoint-blocks instance too large");
  }
  const auto r = static_cast<std::int64_t>(r_real);
  PartitionedDomain domain(r, n);
  std::vector<WeightedSample> support;
  std::vector<Query> queries;
  support.reserve(static_cast<std::size_t>(r));
  queries.reserve(static_cast<std::size_t>(r));
  for (std::int64_t i = 0; i < r; ++i) {
    std::vector<Element> block(static_cast<std::size_t>(n));
    for (std::int64_t j = 0; j < n; ++j) {
      block[static_cast<std::size_t>(j)] = domain.Encode(i, j);
    }
    queries.push_back(Query::Indicator(block));
    support.push_back({Sample(std::move(block)), 1.0 / static_cast<double>(r)});
  }
  auto distribution = std::make_shared<const FiniteDistribution>(
      FiniteDistribution::Explicit(std::move(support)));
  return {domain, n, std::move(distribution), std::move(queries), gamma};
}

SimpleAttackResult RunSimpleGammaAttack(const DisjointBlocksInstance& instance,
                                        Mechanism& mechanism,
                                        std::optional<double> check_eps) {
  SimpleAttackResult result;
  result.answers.reserve(instance.queries.size());
  for (std::size_t i = 0; i < instance.queries.size(); ++i) {
    const Query& q = instance.queries[i];
    if (check_eps &&
        !CheckConcentrationExact(q, *instance.distribution, *check_eps,
                                 instance.gamma)
             .holds) {
      ++result.concentration_violations;
    }
    const double answer = mechanism.Answer(q);
    result.answers.push_back(answer);
    const double deviation =
        std::abs(answer - TrueMean(q, *instance.distribution));
    if (deviation > result.worst_deviation ||
        result.breaking_query_index < 0) {
      result.worst_deviation = deviation;
      result.breaking_query_index = static_cast<std::int64_t>(i);
    }
  }
  return result;
}

}  // namespace adalab
