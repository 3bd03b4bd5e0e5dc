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

#ifndef NGRPO_EVAL_REPORT_H_
#define NGRPO_EVAL_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ngrpo/embed_margin.h"
#include "ngrpo/graph.h"
#include "ngrpo/grpo.h"
#include "ngrpo/policy.h"
#include "ngrpo/prompt.h"

namespace ngrpo {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Per-class scores with 0 for any undefined precision, recall or F1.
std::vector<ClassScores> per_class_scores(std::span<const ClassId> preds,
                                          std::span<const ClassId> golds, std::size_t num_classes);
double macro_f1(std::span<const ClassId> preds, std::span<const ClassId> golds,
                std::size_t num_classes);

struct EvalResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  double mean_resp_len = 0.0;
  double neighbour_freq = 0.0;
  std::size_t n_evaluated = 0;
  std::size_t n_seeds = 1;
};

EvalResult score_predictions(std::span<const ClassId> preds, std::span<const ClassId> golds,
                             std::size_t num_classes);

struct EvalOptions {
  std::size_t max_len = 16;
  std::size_t threads = 1;
};

struct NodePrediction {
  ClassId predicted = 0;
  // Answer-position probabilities of each identifier, summed over the
  // neighbourhood samples.
  std::vector<double> answer_scores;
  Rollout sampled;  // free-running decode, for statistics only
};

// Walks the response grammar deterministically (greedy think segment,
// lowest id on ties) and returns the argmax identifier at the answer slot.
// When given, answer_probs (grown to num_answers) accumulates the
// probability of each identifier at that slot.
ClassId greedy_answer(const Policy& policy, const PolicyParams& params,
                      std::span<const double> features, std::size_t max_len,
                      std::vector<double>* answer_probs = nullptr,
                      std::size_t num_answers = 0);

NodePrediction predict_node(const Policy& policy, const PolicyParams& params,
                            const TextRichNetwork& net, NodeId node, const SampleSpec& spec,
                            std::uint64_t seed, const EvalOptions& opts = {});

EvalResult evaluate(const Policy& policy, const PolicyParams& params, const TextRichNetwork& net,
                    std::span<const NodeId> nodes, const SampleSpec& spec, std::uint64_t seed,
                    const EvalOptions& opts = {});

// Element-wise mean of several results (per-class scores included).
EvalResult average_results(std::span<const EvalResult> results);

inline constexpr std::size_t kDefaultEvalSeeds = 5;

// evaluate() under `num_seeds` seeds derived from `seed`, averaged.
EvalResult evaluate_seeds(const Policy& policy, const PolicyParams& params,
                          const TextRichNetwork& net, std::span<const NodeId> nodes,
                          const SampleSpec& spec, std::uint64_t seed,
                          std::size_t num_seeds = kDefaultEvalSeeds, const EvalOptions& opts = {});

struct LinkPair {
  NodeId u = 0;
  NodeId v = 0;
  int label = 0;  // 1 when (u, v) is an edge

  bool operator==(const LinkPair&) const = default;
};

// Every existing edge plus an equal number of distinct non-edges drawn
// uniformly at random.
std::vector<LinkPair> make_link_pairs(const TextRichNetwork& net, std::uint64_t seed);

// Edge prompt for (u, v); each endpoint's neighbourhood omits the other.
PromptContext make_edge_prompt(const TextRichNetwork& net, NodeId u, NodeId v,
                               const SampleSpec& spec, std::uint64_t seed);

EvalResult evaluate_edge(const Policy& policy, const PolicyParams& params,
                         const TextRichNetwork& net, std::span<const LinkPair> pairs,
                         const SampleSpec& spec, std::uint64_t seed, const EvalOptions& opts = {});

std::string to_json(const EvalResult& result);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double frac = 0.0;
};

struct MarginDistribution {
  std::vector<HistogramBin> bins;
  std::size_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double frac_positive = 0.0;
  double frac_zero = 0.0;
  double frac_negative = 0.0;
};

inline constexpr double kZeroTolerance = 1e-9;

// Equal-width histogram over [min, max]; a single bin when all values agree.
MarginDistribution margin_distribution(std::span<const double> deltas, std::size_t bins);
// Pools the deltas of every node in every report, optionally restricted
// to `nodes`.
MarginDistribution margin_distribution_report(std::span<const MarginReport> reports,
                                              std::size_t bins,
                                              std::span<const NodeId> nodes = {});

std::string histogram_csv(const MarginDistribution& dist);
std::string summary_json(const MarginDistribution& dist);

std::vector<StepMetrics> read_metrics_csv(const std::filesystem::path& path);

}  // namespace ngrpo

#endif  // NGRPO_EVAL_REPORT_H_
