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

#ifndef NGRPO_EXPERIMENT_H_
#define NGRPO_EXPERIMENT_H_

#include <functional>
#include <span>
#include <vector>

#include "ngrpo/embed_margin.h"
#include "ngrpo/eval_report.h"
#include "ngrpo/graph.h"
#include "ngrpo/grpo.h"
#include "ngrpo/policy.h"
#include "ngrpo/run_config.h"

namespace ngrpo {

// Loads dataset.path, or generates the synthetic network when it is empty.
TextRichNetwork load_or_generate(const RunConfig& cfg);
EmbeddingTable build_embeddings(const RunConfig& cfg, const TextRichNetwork& net);

struct Experiment {
  TextRichNetwork net;
  SplitAssignment split;
  EmbeddingTable embeddings;
  MarginReport margins;
  Policy policy;
};

Experiment prepare_experiment(const RunConfig& cfg);

struct EvalPoint {
  std::size_t step = 0;  // number of updates applied
  EvalResult result;
};

struct TrainingRun {
  TrainerState state;
  std::vector<StepMetrics> metrics;
  std::vector<EvalPoint> evals;
};

using StepObserver = std::function<void(const StepMetrics&, const TrainerState&)>;

// Base seed for evaluation, derived from the run seed.
std::uint64_t eval_base_seed(const RunConfig& cfg);

// Test-split evaluation averaged over cfg.eval_seeds seeds.
EvalResult evaluate_test(const Experiment& exp, const RunConfig& cfg, const PolicyParams& params);

// Runs cfg.trainer.steps updates from zero parameters. When cfg.eval_every
// is set, the test split is evaluated before the first update, every
// eval_every updates and after the last one.
TrainingRun run_training(const Experiment& exp, const RunConfig& cfg,
                         const StepObserver& observer = {});

}  // namespace ngrpo

#endif  // NGRPO_EXPERIMENT_H_
