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

#include "ngrpo/reward.h"

#include <cmath>

#include "ngrpo/errors.h"

namespace ngrpo {

double score_format(const ParsedResponse& parsed, const RewardWeights& weights) {
  return parsed.format_ok ? weights.format : 0.0;
}

double score_accuracy(const ParsedResponse& parsed, ClassId gold, std::size_t num_classes,
                      const RewardWeights& weights) {
  if (gold < 0 || static_cast<std::size_t>(gold) >= num_classes) {
    throw DataError("gold class " + std::to_string(gold) + " out of range");
  }
  if (!parsed.format_ok || !parsed.answer) return 0.0;
  return *parsed.answer == static_cast<long long>(gold) ? weights.accuracy : 0.0;
}

double shaped_reward(double base, double g) {
  if (!(g >= 1.0) || !std::isfinite(g)) throw NumericalError("reshape factor must be finite and >= 1");
  return g * base;
}

RewardBreakdown score_response(const ParsedResponse& parsed, ClassId gold, std::size_t num_classes,
                               double g, const RewardWeights& weights) {
  RewardBreakdown r;
  r.s_format = score_format(parsed, weights);
  r.s_acc = score_accuracy(parsed, gold, num_classes, weights);
  r.base = r.s_format + r.s_acc;
  r.g = g;
  r.final_reward = shaped_reward(r.base, g);
  return r;
}

}  // namespace ngrpo
