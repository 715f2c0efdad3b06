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

#ifndef ADALAB_CORE_H_
#define ADALAB_CORE_H_

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace adalab {

// Raised for malformed configurations (missing distribution, bad grid, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Domain elements are dense indices in [0, N).
using Element = std::int64_t;

// A finite domain of size N = num_blocks * block_size split into contiguous
// blocks. Element (block i, within-block index j) is encoded as i * m + j.
// All indices are zero-based.
class PartitionedDomain {
 public:
  PartitionedDomain(std::int64_t num_blocks, std::int64_t block_size);

  std::int64_t num_blocks() const { return num_blocks_; }
  std::int64_t block_size() const { return block_size_; }
  std::int64_t size() const { return num_blocks_ * block_size_; }

  Element Encode(std::int64_t block, std::int64_t index) const;
  std::int64_t BlockOf(Element e) const;
  std::int64_t IndexOf(Element e) const;
  bool Contains(Element e) const { return e >= 0 && e < size(); }

  friend bool operator==(const PartitionedDomain&,
                         const PartitionedDomain&) = default;

 private:
  std::int64_t num_blocks_;
  std::int64_t block_size_;
};

// An ordered tuple of n >= 1 domain elements; duplicates allowed.
class Sample {
 public:
  explicit Sample(std::vector<Element> elements);

  std::span<const Element> elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }

  friend bool operator==(const Sample&, const Sample&) = default;
  friend auto operator<=>(const Sample&, const Sample&) = default;

 private:
  std::vector<Element> elements_;
};

// A query q : X -> [0,1] stored as a default value plus sparse overrides.
// Overrides are kept sorted by element; lookups are binary searches.
class Query {
 public:
  using Entry = std::pair<Element, double>;

  explicit Query(double default_value = 0.0, std::vector<Entry> overrides = {});

  // Indicator of `support` (value 1 there, 0 elsewhere).
  static Query Indicator(std::span<const Element> support);

  double operator()(Element e) const;
  double default_value() const { return default_value_; }
  std::span<const Entry> overrides() const { return overrides_; }

  friend bool operator==(const Query&, const Query&) = default;

 private:
  double default_value_;
  std::vector<Entry> overrides_;
};

struct WeightedSample {
  Sample sample;
  double probability;
};

// Uniform distribution over the m samples S_j = (x_1^j x c, ..., x_r^j x c)
// of a partitioned domain, where c = copies_per_block. Samples are produced
// on demand so that m can be large.
struct BlockRepeatSupport {
  PartitionedDomain domain;
  std::int64_t copies_per_block;
};

// Finite-support distribution over samples of a common length n.
class FiniteDistribution {
 public:
  // Probabilities must be in (0,1] and sum to 1 within 1e-12; samples must be
  // distinct and of equal length.
  static FiniteDistribution Explicit(std::vector<WeightedSample> support);
  static FiniteDistribution BlockRepeat(PartitionedDomain domain,
                                        std::int64_t copies_per_block);

  std::size_t support_size() const;
  std::size_t sample_length() const;
  double probability(std::size_t index) const;
  Sample support_sample(std::size_t index) const;

  // Index of the support sample selected by a uniform draw u in [0,1).
  std::size_t IndexForUniform(double u) const;

  // Non-null when the distribution has block-repeat structure.
  const BlockRepeatSupport* block_repeat() const {
    return std::get_if<BlockRepeatSupport>(&support_);
  }

 private:
  struct ExplicitSupport {
    std::vector<WeightedSample> entries;
    std::vector<double> cumulative;
  };

  explicit FiniteDistribution(std::variant<ExplicitSupport, BlockRepeatSupport> s)
      : support_(std::move(s)) {}

  std::variant<ExplicitSupport, BlockRepeatSupport> support_;
};

// q(S) = (1/|S|) * sum_{x in S} q(x), duplicates counted with multiplicity.
double EmpiricalMean(const Query& q, const Sample& s);

// q(D) = E_{T ~ D}[q(T)].
double TrueMean(const Query& q, const FiniteDistribution& d);

// For block-repeat supports q(S_j) only depends on the overrides that land in
// column j; this returns (column, q(S_j)) for every column touched by an
// override, in increasing column order. Untouched columns equal the default.
std::vector<std::pair<std::int64_t, double>> BlockRepeatColumnMeans(
    const Query& q, const BlockRepeatSupport& support);

enum class MechanismType { kReal, kOracle, kHybrid };

std::string MechanismTypeName(MechanismType type);
MechanismType ParseMechanismType(const std::string& name);

struct TranscriptRound {
  Query query;
  double answer;

  friend bool operator==(const TranscriptRound&,
                         const TranscriptRound&) = default;
};

struct Transcript {
  std::vector<TranscriptRound> rounds;
  std::string mechanism;
  std::uint64_t seed = 0;

  std::size_t size() const { return rounds.size(); }
  bool empty() const { return rounds.empty(); }
};

}  // namespace adalab

#endif  // ADALAB_CORE_H_
