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

#ifndef NGRPO_REWARD_H_
#define NGRPO_REWARD_H_

#include "ngrpo/graph.h"
#include "ngrpo/prompt.h"

namespace ngrpo {

struct RewardWeights {
  double format = 1.0;
  double accuracy = 1.0;
};

struct RewardBreakdown {
  double s_format = 0.0;
  double s_acc = 0.0;
  double base = 0.0;
  double g = 1.0;
  double final_reward = 0.0;
};

double score_format(const ParsedResponse& parsed, const RewardWeights& weights = {});

// Credited only when the response parses and the answer equals `gold`.
// Out-of-range answers score 0.
double score_accuracy(const ParsedResponse& parsed, ClassId gold, std::size_t num_classes,
                      const RewardWeights& weights = {});

double shaped_reward(double base, double g);

RewardBreakdown score_response(const ParsedResponse& parsed, ClassId gold, std::size_t num_classes,
                               double g, const RewardWeights& weights = {});

}  // namespace ngrpo

#endif  // NGRPO_REWARD_H_
