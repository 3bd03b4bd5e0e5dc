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

#ifndef NGRPO_RUN_CONFIG_H_
#define NGRPO_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ngrpo/embed_margin.h"
#include "ngrpo/graph.h"
#include "ngrpo/grpo.h"
#include "ngrpo/policy.h"
#include "ngrpo/prompt.h"
#include "ngrpo/reward.h"

namespace ngrpo {

inline constexpr std::string_view kSeedEnvVar = "NGRPO_SEED";

struct RunConfig {
  // Run seed for training rollouts and evaluation.
  std::uint64_t seed = 1;

  std::filesystem::path dataset_path;  // empty: generate from `synth`
  SyntheticSpec synth;

  SplitRatios split_ratios;
  std::uint64_t split_seed = 1;

  std::string embed_source = "hash";  // "hash" or "file"
  std::filesystem::path embed_path;
  std::size_t embed_dim = 1024;
  std::uint64_t embed_seed = 7;

  SampleSpec sample;
  PolicyConfig policy;
  TrainerConfig trainer;
  RewardWeights reward;

  ShapingParams shaping;
  std::size_t shaping_k = 1;

  std::size_t eval_seeds = 5;
  std::size_t eval_every = 0;  // 0: evaluate only at the end
  std::size_t histogram_bins = 20;
  std::size_t checkpoint_every = 100;

  std::filesystem::path output_dir = "ngrpo_out";
};

struct ConfigKey {
  std::string name;
  std::string help;
};

// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

// Sets one key from its textual value. Throws ConfigError naming the key on
// an unknown key or an unparsable value.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& cfg, std::string_view key);

// "key = value" lines; '#' starts a comment.
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin = "config");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

// Applies NGRPO_SEED when set. Returns true if it was applied.
bool apply_seed_env(RunConfig& cfg);

// Range checks and path existence. Throws ConfigError.
void validate(const RunConfig& cfg);

// All keys with their current values, one "key = value" line each.
std::string dump_config(const RunConfig& cfg);

}  // namespace ngrpo

#endif  // NGRPO_RUN_CONFIG_H_
