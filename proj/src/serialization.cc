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

#include "adalab/serialization.h"

#include <fstream>
#include <utility>
#include <vector>

namespace adalab {
namespace {

using nlohmann::json;

const json& Field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw ConfigError(std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

std::vector<Element> ElementsFrom(const json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of elements");
  std::vector<Element> elements;
  elements.reserve(j.size());
  for (const json& e : j) {
    if (!e.is_number_integer()) throw ConfigError("element must be an integer");
    elements.push_back(e.get<Element>());
  }
  return elements;
}

}  // namespace

json ToJson(const Sample& s) {
  return json{{"elements", std::vector<Element>(s.elements().begin(),
                                                s.elements().end())}};
}

json ToJson(const Query& q) {
  json overrides = json::array();
  for (const auto& [e, v] : q.overrides()) overrides.push_back({e, v});
  return json{{"default", q.default_value()}, {"overrides", overrides}};
}

json ToJson(const FiniteDistribution& d) {
  if (const auto* br = d.block_repeat()) {
    return json{{"kind", "block_repeat"},
                {"num_blocks", br->domain.num_blocks()},
                {"block_size", br->domain.block_size()},
                {"copies_per_block", br->copies_per_block}};
  }
  json support = json::array();
  for (std::size_t i = 0; i < d.support_size(); ++i) {
    support.push_back({{"sample", ToJson(d.support_sample(i))["elements"]},
                       {"probability", d.probability(i)}});
  }
  return json{{"kind", "explicit"}, {"support", support}};
}

json ToJson(const Transcript& t) {
  json rounds = json::array();
  for (const TranscriptRound& r : t.rounds) {
    rounds.push_back({{"query", ToJson(r.query)}, {"answer", r.answer}});
  }
  return json{{"mechanism", t.mechanism}, {"seed", t.seed}, {"rounds", rounds}};
}

Sample SampleFromJson(const json& j) {
  if (j.is_array()) return Sample(ElementsFrom(j));
  return Sample(ElementsFrom(Field(j, "elements")));
}

Query QueryFromJson(const json& j) {
  const double default_value =
      j.contains("default") ? j.at("default").get<double>() : 0.0;
  std::vector<Query::Entry> overrides;
  if (j.contains("overrides")) {
    const json& list = j.at("overrides");
    if (!list.is_array()) throw ConfigError("'overrides' must be an array");
    for (const json& entry : list) {
      if (!entry.is_array() || entry.size() != 2 ||
          !entry[0].is_number_integer() || !entry[1].is_number()) {
        throw ConfigError("override entries must be [element, value] pairs");
      }
      overrides.emplace_back(entry[0].get<Element>(), entry[1].get<double>());
    }
  }
  return Query(default_value, std::move(overrides));
}

FiniteDistribution DistributionFromJson(const json& j) {
  const std::string kind =
      j.contains("kind") ? j.at("kind").get<std::string>() : "explicit";
  if (kind == "block_repeat") {
    PartitionedDomain domain(Field(j, "num_blocks").get<std::int64_t>(),
                             Field(j, "block_size").get<std::int64_t>());
    return FiniteDistribution::BlockRepeat(
        domain, Field(j, "copies_per_block").get<std::int64_t>());
  }
  if (kind != "explicit") {
    throw ConfigError("unknown distribution kind '" + kind + "'");
  }
  const json& support = Field(j, "support");
  if (!support.is_array()) throw ConfigError("'support' must be an array");
  std::vector<WeightedSample> entries;
  entries.reserve(support.size());
  for (const json& entry : support) {
    entries.push_back({SampleFromJson(Field(entry, "sample")),
                       Field(entry, "probability").get<double>()});
  }
  return FiniteDistribution::Explicit(std::move(entries));
}

Transcript TranscriptFromJson(const json& j) {
  Transcript t;
  t.mechanism = j.value("mechanism", "");
  t.seed = j.value("seed", std::uint64_t{0});
  for (const json& r : Field(j, "rounds")) {
    t.rounds.push_back(
        {QueryFromJson(Field(r, "query")), Field(r, "answer").get<double>()});
  }
  return t;
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

}  // namespace adalab
