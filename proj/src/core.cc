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

#include "adalab/core.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace adalab {
namespace {

constexpr double kProbabilityTolerance = 1e-12;

bool InUnitInterval(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

PartitionedDomain::PartitionedDomain(std::int64_t num_blocks,
                                     std::int64_t block_size)
    : num_blocks_(num_blocks), block_size_(block_size) {
  if (num_blocks <= 0 || block_size <= 0) {
    throw std::invalid_argument(
        "PartitionedDomain: num_blocks and block_size must be positive");
  }
}

Element PartitionedDomain::Encode(std::int64_t block,
                                  std::int64_t index) const {
  if (block < 0 || block >= num_blocks_ || index < 0 || index >= block_size_) {
    throw std::out_of_range("PartitionedDomain::Encode: index out of range");
  }
  return block * block_size_ + index;
}

std::int64_t PartitionedDomain::BlockOf(Element e) const {
  if (!Contains(e)) {
    throw std::out_of_range("PartitionedDomain::BlockOf: element not in domain");
  }
  return e / block_size_;
}

std::int64_t PartitionedDomain::IndexOf(Element e) const {
  if (!Contains(e)) {
    throw std::out_of_range("PartitionedDomain::IndexOf: element not in domain");
  }
  return e % block_size_;
}

Sample::Sample(std::vector<Element> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw std::invalid_argument("degenerate sample");
  for (Element e : elements_) {
    if (e < 0) throw std::invalid_argument("Sample: negative element index");
  }
}

Query::Query(double default_value, std::vector<Entry> overrides)
    : default_value_(default_value), overrides_(std::move(overrides)) {
  if (!InUnitInterval(default_value_)) {
    throw std::invalid_argument("Query: default value outside [0,1]");
  }
  if (!std::is_sorted(overrides_.begin(), overrides_.end(),
                      [](const Entry& a, const Entry& b) {
                        return a.first < b.first;
                      })) {
    std::sort(overrides_.begin(), overrides_.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
  }
  for (std::size_t i = 0; i < overrides_.size(); ++i) {
    if (!InUnitInterval(overrides_[i].second)) {
      throw std::invalid_argument("Query: override value outside [0,1]");
    }
    if (i > 0 && overrides_[i].first == overrides_[i - 1].first) {
      throw std::invalid_argument("Query: duplicate override for element " +
                                  std::to_string(overrides_[i].first));
    }
  }
}

Query Query::Indicator(std::span<const Element> support) {
  std::vector<Entry> entries;
  entries.reserve(support.size());
  for (Element e : support) entries.emplace_back(e, 1.0);
  return Query(0.0, std::move(entries));
}

double Query::operator()(Element e) const {
  auto it = std::lower_bound(
      overrides_.begin(), overrides_.end(), e,
      [](const Entry& entry, Element key) { return entry.first < key; });
  if (it != overrides_.end() && it->first == e) return it->second;
  return default_value_;
}

FiniteDistribution FiniteDistribution::Explicit(
    std::vector<WeightedSample> support) {
  if (support.empty()) {
    throw std::invalid_argument("FiniteDistribution: empty support");
  }
  const std::size_t n = support.front().sample.size();
  std::vector<double> cumulative;
  cumulative.reserve(support.size());
  double total = 0.0;
  for (const WeightedSample& ws : support) {
    if (ws.sample.size() != n) {
      throw std::invalid_argument(
          "FiniteDistribution: support samples differ in length");
    }
    if (!(ws.probability > 0.0 && ws.probability <= 1.0)) {
      throw std::invalid_argument(
          "FiniteDistribution: probabilities must lie in (0,1]");
    }
    total += ws.probability;
    cumulative.push_back(total);
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    throw std::invalid_argument("FiniteDistribution: probabilities sum to " +
                                std::to_string(total));
  }
  std::vector<const Sample*> sorted;
  sorted.reserve(support.size());
  for (const WeightedSample& ws : support) sorted.push_back(&ws.sample);
  std::sort(sorted.begin(), sorted.end(),
            [](const Sample* a, const Sample* b) { return *a < *b; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (*sorted[i] == *sorted[i - 1]) {
      throw std::invalid_argument(
          "FiniteDistribution: duplicate support sample");
    }
  }
  return FiniteDistribution(
      ExplicitSupport{std::move(support), std::move(cumulative)});
}

FiniteDistribution FiniteDistribution::BlockRepeat(
    PartitionedDomain domain, std::int64_t copies_per_block) {
  if (copies_per_block <= 0) {
    throw std::invalid_argument(
        "FiniteDistribution: copies_per_block must be positive");
  }
  return FiniteDistribution(BlockRepeatSupport{domain, copies_per_block});
}

std::size_t FiniteDistribution::support_size() const {
  if (const auto* br = block_repeat()) {
    return static_cast<std::size_t>(br->domain.block_size());
  }
  return std::get<ExplicitSupport>(support_).entries.size();
}

std::size_t FiniteDistribution::sample_length() const {
  if (const auto* br = block_repeat()) {
    return static_cast<std::size_t>(br->domain.num_blocks() *
                                    br->copies_per_block);
  }
  return std::get<ExplicitSupport>(support_).entries.front().sample.size();
}

double FiniteDistribution::probability(std::size_t index) const {
  if (index >= support_size()) {
    throw std::out_of_range("FiniteDistribution::probability");
  }
  if (const auto* br = block_repeat()) {
    return 1.0 / static_cast<double>(br->domain.block_size());
  }
  return std::get<ExplicitSupport>(support_).entries[index].probability;
}

Sample FiniteDistribution::support_sample(std::size_t index) const {
  if (index >= support_size()) {
    throw std::out_of_range("FiniteDistribution::support_sample");
  }
  if (const auto* br = block_repeat()) {
    std::vector<Element> elements;
    elements.reserve(sample_length());
    for (std::int64_t block = 0; block < br->domain.num_blocks(); ++block) {
      const Element e =
          br->domain.Encode(block, static_cast<std::int64_t>(index));
      elements.insert(elements.end(),
                      static_cast<std::size_t>(br->copies_per_block), e);
    }
    return Sample(std::move(elements));
  }
  return std::get<ExplicitSupport>(support_).entries[index].sample;
}

std::size_t FiniteDistribution::IndexForUniform(double u) const {
  const std::size_t size = support_size();
  if (block_repeat() != nullptr) {
    auto index = static_cast<std::size_t>(u * static_cast<double>(size));
    return std::min(index, size - 1);
  }
  const auto& cumulative = std::get<ExplicitSupport>(support_).cumulative;
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(),
                             u * cumulative.back());
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), size - 1);
}

double EmpiricalMean(const Query& q, const Sample& s) {
  double total = 0.0;
  for (Element e : s.elements()) total += q(e);
  return total / static_cast<double>(s.size());
}

double TrueMean(const Query& q, const FiniteDistribution& d) {
  if (const auto* br = d.block_repeat()) {
    // Every domain element appears in exactly one support sample, so q(D) is
    // the plain average of q over the domain.
    const double n_domain = static_cast<double>(br->domain.size());
    double shift = 0.0;
    for (const auto& [e, v] : q.overrides()) {
      if (br->domain.Contains(e)) shift += v - q.default_value();
    }
    return q.default_value() + shift / n_domain;
  }
  // Summing offsets from the default keeps constant queries exact.
  double shift = 0.0;
  for (std::size_t i = 0; i < d.support_size(); ++i) {
    shift += d.probability(i) *
             (EmpiricalMean(q, d.support_sample(i)) - q.default_value());
  }
  return q.default_value() + shift;
}

std::vector<std::pair<std::int64_t, double>> BlockRepeatColumnMeans(
    const Query& q, const BlockRepeatSupport& support) {
  const PartitionedDomain& domain = support.domain;
  std::vector<std::pair<std::int64_t, double>> shifts;
  shifts.reserve(q.overrides().size());
  for (const auto& [e, v] : q.overrides()) {
    if (!domain.Contains(e)) continue;
    shifts.emplace_back(domain.IndexOf(e), v - q.default_value());
  }
  std::stable_sort(
      shifts.begin(), shifts.end(),
      [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<std::int64_t, double>> means;
  const double r = static_cast<double>(domain.num_blocks());
  for (std::size_t i = 0; i < shifts.size();) {
    const std::int64_t column = shifts[i].first;
    double sum = 0.0;
    for (; i < shifts.size() && shifts[i].first == column; ++i) {
      sum += shifts[i].second;
    }
    means.emplace_back(column, q.default_value() + sum / r);
  }
  return means;
}

std::string MechanismTypeName(MechanismType type) {
  switch (type) {
    case MechanismType::kReal:
      return "real";
    case MechanismType::kOracle:
      return "oracle";
    case MechanismType::kHybrid:
      return "hybrid";
  }
  return "unknown";
}

MechanismType ParseMechanismType(const std::string& name) {
  if (name == "real") return MechanismType::kReal;
  if (name == "oracle") return MechanismType::kOracle;
  if (name == "hybrid") return MechanismType::kHybrid;
  throw ConfigError("unknown mechanism kind '" + name + "'");
}

}  // namespace adalab
