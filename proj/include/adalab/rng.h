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

// Seeding discipline. Every random quantity in an experiment is drawn from a
// stream identified by (master seed, trial index, label). Sequential streams
// use std::mt19937_64; mechanism noise uses a counter-based generator keyed
// by round index so that coupled runs stay aligned regardless of branching.

#ifndef ADALAB_RNG_H_
#define ADALAB_RNG_H_

#include <cstdint>
#include <limits>
#include <random>
#include <string>

namespace adalab {

enum class StreamLabel : std::uint64_t {
  kSampleDraw = 1,
  kMechNoiseReal = 2,
  kMechNoiseOracle = 3,
  kAttackBernoulli = 4,
  kAttackP = 5,
};

std::string StreamLabelName(StreamLabel label);
// Throws std::invalid_argument for anything outside the fixed label set.
StreamLabel ParseStreamLabel(const std::string& name);

// SplitMix64 finalizer; a bijection on 64-bit words.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t master_seed, std::uint64_t trial_index,
                         StreamLabel label);

// Maps 64 random bits to a double in the open interval (0,1).
constexpr double OpenUnit(std::uint64_t bits) {
  // 52 bits keep the largest value, 1 - 2^-53, representable below 1.
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

// Sequential stream. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on (0,1).
  double Uniform() { return OpenUnit(engine_()); }
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

Rng DeriveStream(std::uint64_t master_seed, std::uint64_t trial_index,
                 StreamLabel label);

// Stateless generator: the draws for (key, counter) never depend on how many
// other counters were consumed. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t key, std::uint64_t counter)
      : state_(Mix64(key ^ Mix64(counter))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return Mix64(state_);
  }
  double Uniform() { return OpenUnit((*this)()); }

 private:
  std::uint64_t state_;
};

}  // namespace adalab

#endif  // ADALAB_RNG_H_
