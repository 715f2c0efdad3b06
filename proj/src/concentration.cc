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

#include "adalab/concentration.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adalab {

ConcentrationReport CheckConcentrationExact(const Query& q,
                                            const FiniteDistribution& d,
                                            double eps, double gamma) {
  const double truth = TrueMean(q, d);
  ConcentrationReport report{false, 0.0, 0.0, truth};

  if (const BlockRepeatSupport* br = d.block_repeat()) {
    const auto columns = BlockRepeatColumnMeans(q, *br);
    const std::int64_t m = br->domain.block_size();
    std::int64_t deviating = 0;
    for (const auto& [column, mean] : columns) {
      const double dev = std::abs(mean - truth);
      report.max_deviation = std::max(report.max_deviation, dev);
      if (dev >= eps) ++deviating;
    }
    const auto untouched = m - static_cast<std::int64_t>(columns.size());
    if (untouched > 0) {
      const double dev = std::abs(q.default_value() - truth);
      report.max_deviation = std::max(report.max_deviation, dev);
      if (dev >= eps) deviating += untouched;
    }
    report.deviation_mass =
        static_cast<double>(deviating) / static_cast<double>(m);
  } else {
    for (std::size_t i = 0; i < d.support_size(); ++i) {
      const double dev = std::abs(EmpiricalMean(q, d.support_sample(i)) - truth);
      report.max_deviation = std::max(report.max_deviation, dev);
      if (dev >= eps) report.deviation_mass += d.probability(i);
    }
  }
  report.holds = report.deviation_mass <= gamma;
  return report;
}

double HoeffdingGamma(std::int64_t n, double eps) {
  if (n < 1) throw std::invalid_argument("HoeffdingGamma: n must be >= 1");
  return std::min(1.0, 2.0 * std::exp(-2.0 * static_cast<double>(n) * eps * eps));
}

}  // namespace adalab
