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

#ifndef NGRPO_GRPO_H_
#define NGRPO_GRPO_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ngrpo/embed_margin.h"
#include "ngrpo/graph.h"
#include "ngrpo/policy.h"
#include "ngrpo/prompt.h"
#include "ngrpo/reward.h"

namespace ngrpo {

enum class AdvantageMode { kGrpo, kDrGrpo };

std::string_view to_string(AdvantageMode mode);
AdvantageMode parse_advantage_mode(std::string_view text);

// (R_i - mean) / std with population std; all zeros when std < 1e-12.
std::vector<double> advantages_grpo(std::span<const double> rewards);
// R_i - mean.
std::vector<double> advantages_drgrpo(std::span<const double> rewards);
std::vector<double> compute_advantages(std::span<const double> rewards, AdvantageMode mode);

struct RolloutGroup {
  NodeId node = 0;
  std::vector<double> features;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct ObjectiveResult {
  double objective = 0.0;
  // Sums over every scored token of every rollout in the group.
  double kl_sum = 0.0;
  double entropy_sum = 0.0;
  std::size_t tokens = 0;
  PolicyParams grad;  // dJ/dparams, for ascent
};

// Clipped token-level surrogate with an exact per-position KL penalty:
//   J = 1/G sum_i sum_t [min(r A_i, clip(r, 1-eps, 1+eps) A_i) - beta KL_t]
// with r = exp(logpi(o_t) - logprobs_old_t). The old policy enters only
// through the log-probabilities stored on each rollout.
ObjectiveResult surrogate_objective(const Policy& policy, const PolicyParams& params,
                                    const PolicyParams& ref, const RolloutGroup& group,
                                    double clip_eps, double kl_coeff);

struct AdamConfig {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, AdamConfig config);

  // Gradient ascent step on `params`.
  void ascend(std::span<double> params, std::span<const double> grad);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

struct TrainerConfig {
  std::size_t group_size = 8;
  double clip_eps = 0.2;
  double kl_coeff = 0.02;
  AdamConfig adam;
  std::size_t inner_epochs = 1;
  // Global L2 norm cap on the batch gradient before the Adam update; 0 disables.
  double max_grad_norm = 1.0;
  std::size_t batch_prompts = 16;
  std::size_t max_len = 16;
  AdvantageMode advantage_mode = AdvantageMode::kDrGrpo;
  bool shaping = true;
  std::uint64_t seed = 1;
  std::size_t steps = 400;
  std::size_t threads = 1;
};

void validate(const TrainerConfig& cfg);

struct TrainerState {
  PolicyParams params;
  PolicyParams ref;  // frozen snapshot taken at initialisation
  Adam adam;
  std::size_t step = 0;
};

TrainerState init_trainer(const Policy& policy, const TrainerConfig& cfg);
TrainerState init_trainer(const Policy& policy, PolicyParams start, const TrainerConfig& cfg);

// Everything train_step reads besides the parameters.
struct TrainingData {
  const TextRichNetwork* net = nullptr;
  std::vector<NodeId> train_nodes;
  SampleSpec sample;
  RewardWeights weights;
  // Reshape factor g per node id; ignored when shaping is off.
  std::vector<double> reshape;
};

// Builds the per-node reshape table from a margin report.
std::vector<double> reshape_table(const MarginReport& report);

struct StepMetrics {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double objective = 0.0;
  double kl = 0.0;       // mean per-token KL to the reference
  double entropy = 0.0;  // mean per-token entropy of the sampling policy
  double resp_len = 0.0;
  double neighbour_freq = 0.0;
  double format_rate = 0.0;
  double acc_rate = 0.0;
};

// One GRPO update. Rollout seeds are derived from (cfg.seed, step, prompt,
// index) so results do not depend on cfg.threads.
StepMetrics train_step(const Policy& policy, TrainerState& state, const TrainingData& data,
                       const TrainerConfig& cfg);

// Mean count of the neighbour reason token per rollout.
double neighbour_token_frequency(const Vocabulary& vocab, std::span<const Rollout> rollouts);
std::size_t response_length(const Rollout& r);

// Node-classification prompt for `node` with a fresh neighbourhood sample.
PromptContext make_node_prompt(const TextRichNetwork& net, NodeId node, const SampleSpec& spec,
                               std::uint64_t seed);

std::string metrics_csv_header();
std::string metrics_csv_row(const StepMetrics& m);

}  // namespace ngrpo

#endif  // NGRPO_GRPO_H_
