// Copyright 2026 The ngrpo Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NGRPO_RNG_H_
#define NGRPO_RNG_H_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ngrpo {

// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

// Derives a child seed from a parent seed and a path of indices, e.g.
// derive_seed(run_seed, {step, prompt, rollout}). Order-sensitive.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Seeded generator with platform-independent draws. std::mt19937_64 output is
// fully specified by the standard; the distributions below are implemented
// here rather than borrowed from <random>, whose algorithms vary by vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ngrpo

#endif  // NGRPO_RNG_H_
