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

// JSON encoding of the core types. Field names are stable:
//
//   Sample:        {"elements": [e0, e1, ...]}
//   Query:         {"default": v, "overrides": [[element, value], ...]}
//   Distribution:  {"kind": "explicit",
//                   "support": [{"sample": [..], "probability": p}, ...]}
//                  {"kind": "block_repeat", "num_blocks": r,
//                   "block_size": m, "copies_per_block": c}
//   Transcript:    {"mechanism": "real", "seed": s,
//                   "rounds": [{"query": Query, "answer": a}, ...]}

#ifndef ADALAB_SERIALIZATION_H_
#define ADALAB_SERIALIZATION_H_

#include <string>

#include "adalab/core.h"
#include "json.hpp"

namespace adalab {

nlohmann::json ToJson(const Sample& s);
nlohmann::json ToJson(const Query& q);
nlohmann::json ToJson(const FiniteDistribution& d);
nlohmann::json ToJson(const Transcript& t);

// The parsers throw ConfigError on schema violations and propagate the
// std::invalid_argument raised by the type invariants.
Sample SampleFromJson(const nlohmann::json& j);
Query QueryFromJson(const nlohmann::json& j);
FiniteDistribution DistributionFromJson(const nlohmann::json& j);
Transcript TranscriptFromJson(const nlohmann::json& j);

nlohmann::json ReadJsonFile(const std::string& path);

}  // namespace adalab

#endif  // ADALAB_SERIALIZATION_H_
