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

// Hard instances and the attacks that break noise-addition mechanisms with
// concentrated queries.
//
// The hard instance splits a domain of size N into r blocks of m elements.
// The distribution picks one column j uniformly and outputs the sample
// (x_1^j repeated n/r times, ..., x_r^j repeated n/r times).
//
// The score attack issues k information queries, each a Bernoulli(p_t) table
// on block 1 with p_t ~ Unif[0,1], accumulates
//   Z_j += (a_t - p_t / r) * (q_t(x_1^j) - p_t)
// and finally asks the indicator of column argmax_j Z_j. The attack only sees
// the answers it receives; it never touches the mechanism's sample.

#ifndef ADALAB_ATTACK_H_
#define ADALAB_ATTACK_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "adalab/core.h"
#include "adalab/mechanisms.h"
#include "adalab/rng.h"

namespace adalab {

// r, m and N = r * m for targeted concentration (eps, gamma). r = ceil(1/eps)
// so that 1/r <= eps, and N = max{r^2, r/gamma} rounded up to a multiple of r.
// Sizes are doubles because N overflows 64 bits for tiny gamma.
struct HardInstanceShape {
  std::int64_t num_blocks;
  double block_size;
  double domain_size;
};

HardInstanceShape HardInstanceShapeFor(double eps, double gamma);

struct HardInstance {
  PartitionedDomain domain;
  std::int64_t n;
  std::int64_t copies_per_block;
  std::shared_ptr<const FiniteDistribution> distribution;
  double eps;
  double gamma;

  std::int64_t num_blocks() const { return domain.num_blocks(); }
  std::int64_t support_size() const { return domain.block_size(); }
  // q*(D) = 1/m for the final indicator query.
  double final_query_true_mean() const {
    return 1.0 / static_cast<double>(domain.block_size());
  }
};

// Requires eps, gamma in (0,1] and n a positive multiple of r.
HardInstance BuildHardInstance(double eps, double gamma, std::int64_t n);

// Hoeffding constant for the score attack: with answers clipped to
// [clip_lo, clip_hi] every score difference satisfies |W_t| <= a where
// a = 2 (max(|clip_lo|, clip_hi) + 1), giving C = 72 a^2.
double DerivedHoeffdingConstant(const NoiseSpec& noise);

struct AttackSeeds {
  std::uint64_t p_seed = 0;
  std::uint64_t bernoulli_seed = 0;

  static AttackSeeds ForTrial(std::uint64_t master_seed, std::uint64_t trial);
};

// Scores and pending round for the score attack. `candidates` limits the
// Bernoulli tables and scores to the first columns of block 1; zero means all
// m columns. The table of round t is drawn from a counter stream keyed by
// (bernoulli seed, t).
class AttackState {
 public:
  AttackState(const HardInstance& instance, std::int64_t k, AttackSeeds seeds,
              std::int64_t candidates = 0);

  // Draws p_t and the Bernoulli table and returns q_t. Must be followed by
  // RecordAnswer before the next call.
  Query PrepareInfoQuery();
  void RecordAnswer(double answer);

  std::span<const double> scores() const { return scores_; }
  std::int64_t rounds_done() const { return rounds_done_; }
  std::int64_t k() const { return k_; }
  std::int64_t num_blocks() const { return num_blocks_; }
  bool pending() const { return pending_; }
  // p_t and q_t(x_1^j) of the round awaiting an answer (or the last round).
  double current_p() const { return p_; }
  std::span<const double> current_table() const { return table_; }

 private:
  std::int64_t k_;
  std::int64_t num_blocks_;
  Rng p_rng_;
  std::uint64_t bernoulli_key_;
  std::vector<double> scores_;
  std::vector<double> table_;
  std::vector<Query::Entry> entries_;
  double p_ = 0.0;
  bool pending_ = false;
  std::int64_t rounds_done_ = 0;
};

// Index of the largest score, smallest index on ties.
std::int64_t ArgmaxScore(std::span<const double> scores);

// One information round against `mechanism`; returns the answer.
double InfoRound(AttackState& state, Mechanism& mechanism);

// Indicator of {x_i^{j*} : i in [r]}. Requires rounds_done == k.
Query FinalQuery(const AttackState& state, const HardInstance& instance);

struct Algorithm1Options {
  bool record_transcript = false;
  // Checks every issued query for (eps, gamma)-concentration on the
  // instance distribution and counts failures.
  bool check_concentration = false;
  std::int64_t candidates = 0;
};

struct Algorithm1Result {
  std::int64_t j_star = 0;
  bool success = false;
  double final_answer = 0.0;
  // |answer on q* - q*(D)|.
  double final_deviation = 0.0;
  // |pre-noise value the mechanism used for q* - q*(D)|; equals
  // |q*(S) - q*(D)| for the real mechanism.
  double signal_deviation = 0.0;
  double final_noise = 0.0;
  std::int64_t queries_checked = 0;
  std::int64_t concentration_violations = 0;
  std::optional<Transcript> transcript;
};

// Runs k information rounds and the final query. `true_index` is the column
// of the mechanism's sample and is used only to score the outcome.
Algorithm1Result RunAlgorithm1(const HardInstance& instance,
                               Mechanism& mechanism, std::int64_t k,
                               std::int64_t true_index, AttackSeeds seeds,
                               const Algorithm1Options& options = {});

// The score attack as an Analyst, for use with RunInteraction. Issues k
// information queries, then the final query when `final_query` is set.
class Algorithm1Analyst : public Analyst {
 public:
  Algorithm1Analyst(const HardInstance& instance, std::int64_t k,
                    AttackSeeds seeds, bool final_query = true,
                    std::int64_t candidates = 0);

  Query NextQuery(const Transcript& prefix) override;
  const AttackState& state() const { return state_; }
  std::int64_t total_rounds() const { return state_.k() + (final_query_ ? 1 : 0); }

 private:
  const HardInstance* instance_;
  AttackState state_;
  bool final_query_;
  bool final_issued_ = false;
};

// Uniform distribution over r = ceil(1/gamma) disjoint samples S_i, each the
// n distinct elements of block i, plus the r block-indicator queries.
struct DisjointBlocksInstance {
  PartitionedDomain domain;
  std::int64_t n;
  std::shared_ptr<const FiniteDistribution> distribution;
  std::vector<Query> queries;
  double gamma;
};

DisjointBlocksInstance BuildDisjointBlocksInstance(double gamma,
                                                   std::int64_t n);

struct SimpleAttackResult {
  double worst_deviation = 0.0;
  // First query attaining worst_deviation.
  std::int64_t breaking_query_index = -1;
  std::vector<double> answers;
  std::int64_t concentration_violations = 0;
};

// Issues every block indicator and reports the largest |answer - q(D)|.
// With check_eps set, each query is also checked for (check_eps, gamma)
// concentration.
SimpleAttackResult RunSimpleGammaAttack(const DisjointBlocksInstance& instance,
                                        Mechanism& mechanism,
                                        std::optional<double> check_eps = {});

}  // namespace adalab

#endif  // ADALAB_ATTACK_H_
