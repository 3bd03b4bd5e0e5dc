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

#include "ngrpo/experiment.h"

#include "ngrpo/errors.h"
#include "ngrpo/rng.h"

namespace ngrpo {

TextRichNetwork load_or_generate(const RunConfig& cfg) {
  if (!cfg.dataset_path.empty()) return load_jsonl(cfg.dataset_path);
  return generate_synthetic(cfg.synth);
}

EmbeddingTable build_embeddings(const RunConfig& cfg, const TextRichNetwork& net) {
  if (cfg.embed_source == "file") return load_embeddings(cfg.embed_path, net);
  return hash_embed_network(net, cfg.embed_dim, cfg.embed_seed);
}

Experiment prepare_experiment(const RunConfig& cfg) {
  validate(cfg);
  TextRichNetwork net = load_or_generate(cfg);
  SplitAssignment parts = split(net, cfg.split_ratios, cfg.split_seed);
  EmbeddingTable emb = build_embeddings(cfg, net);
  MarginReport margins = margin_gain(net, emb, cfg.shaping_k, cfg.shaping);
  Policy policy = Policy::for_classes(net.num_classes(), cfg.policy);
  return Experiment{std::move(net), std::move(parts), std::move(emb), std::move(margins),
                    std::move(policy)};
}

std::uint64_t eval_base_seed(const RunConfig& cfg) { return derive_seed(cfg.seed, {0xe7a1}); }

EvalResult evaluate_test(const Experiment& exp, const RunConfig& cfg, const PolicyParams& params) {
  EvalOptions opts;
  opts.max_len = cfg.trainer.max_len;
  opts.threads = cfg.trainer.threads;
  return evaluate_seeds(exp.policy, params, exp.net, exp.split.test, cfg.sample,
                        eval_base_seed(cfg), cfg.eval_seeds, opts);
}

TrainingRun run_training(const Experiment& exp, const RunConfig& cfg, const StepObserver& observer) {
  TrainingRun run;
  run.state = init_trainer(exp.policy, cfg.trainer);
  TrainingData data;
  data.net = &exp.net;
  data.train_nodes = exp.split.train;
  data.sample = cfg.sample;
  data.weights = cfg.reward;
  data.reshape = reshape_table(exp.margins);

  TrainerConfig tc = cfg.trainer;
  tc.seed = cfg.seed;
  const std::size_t steps = tc.steps;
  auto maybe_eval = [&](std::size_t done) {
    if (cfg.eval_every == 0) return;
    if (done == 0 || done == steps || done % cfg.eval_every == 0) {
      run.evals.push_back(EvalPoint{done, evaluate_test(exp, cfg, run.state.params)});
    }
  };
  maybe_eval(0);
  for (std::size_t s = 0; s < steps; ++s) {
    run.metrics.push_back(train_step(exp.policy, run.state, data, tc));
    if (observer) observer(run.metrics.back(), run.state);
    maybe_eval(s + 1);
  }
  return run;
}

}  // namespace ngrpo
