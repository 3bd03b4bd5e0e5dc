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

#include "ngrpo/eval_report.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ngrpo/errors.h"
#include "ngrpo/parallel.h"
#include "ngrpo/rng.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

namespace {

constexpr std::uint64_t kNeighbourhoodDomain = 1;
constexpr std::uint64_t kSampleDomain = 2;
constexpr std::uint64_t kSeedDomain = 3;
constexpr std::uint64_t kPairDomain = 4;

}  // namespace

// ---------------------------------------------------------------------------
// Scores

std::vector<ClassScores> per_class_scores(std::span<const ClassId> preds,
                                          std::span<const ClassId> golds, std::size_t num_classes) {
  if (preds.size() != golds.size()) throw Error("predictions and gold labels differ in length");
  std::vector<double> tp(num_classes, 0.0), fp(num_classes, 0.0), fn(num_classes, 0.0);
  auto in_range = [&](ClassId c) { return c >= 0 && static_cast<std::size_t>(c) < num_classes; };
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!in_range(golds[i])) throw DataError("gold label out of range");
    const auto g = static_cast<std::size_t>(golds[i]);
    if (preds[i] == golds[i]) {
      tp[g] += 1.0;
      continue;
    }
    fn[g] += 1.0;
    if (in_range(preds[i])) fp[static_cast<std::size_t>(preds[i])] += 1.0;
  }
  std::vector<ClassScores> out(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    ClassScores& s = out[c];
    s.precision = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    s.recall = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  }
  return out;
}

double macro_f1(std::span<const ClassId> preds, std::span<const ClassId> golds,
                std::size_t num_classes) {
  if (num_classes == 0) throw Error("macro_f1 needs at least one class");
  double sum = 0.0;
  for (const ClassScores& s : per_class_scores(preds, golds, num_classes)) sum += s.f1;
  return sum / static_cast<double>(num_classes);
}

EvalResult score_predictions(std::span<const ClassId> preds, std::span<const ClassId> golds,
                             std::size_t num_classes) {
  EvalResult r;
  r.per_class = per_class_scores(preds, golds, num_classes);
  double f1 = 0.0;
  for (const ClassScores& s : r.per_class) f1 += s.f1;
  r.macro_f1 = f1 / static_cast<double>(num_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == golds[i] ? 1 : 0;
  r.n_evaluated = preds.size();
  r.accuracy = preds.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(preds.size());
  return r;
}

// ---------------------------------------------------------------------------
// Prediction

ClassId greedy_answer(const Policy& policy, const PolicyParams& params,
                      std::span<const double> features, std::size_t max_len,
                      std::vector<double>* answer_probs, std::size_t num_answers) {
  const Vocabulary& vocab = policy.vocab();
  if (num_answers == 0) num_answers = vocab.num_classes();
  if (num_answers > vocab.num_classes()) throw DataError("more answers requested than identifiers");
  if (max_len < 5) throw ConfigError("max_len must be >= 5");
  if (answer_probs && answer_probs->size() < num_answers) answer_probs->resize(num_answers, 0.0);

  DecodeState state = advance(vocab, DecodeState{}, Vocabulary::kThinkOpen);
  std::vector<double> z(vocab.size());
  const std::size_t budget = max_len - 5;
  for (std::size_t t = 0; t < budget; ++t) {
    next_token_logits(policy, params, features, state, z);
    TokenId best = Vocabulary::kThinkClose;
    for (std::size_t r = 0; r < vocab.num_reason(); ++r) {
      if (z[vocab.reason(r)] > z[best]) best = vocab.reason(r);
    }
    if (best == Vocabulary::kThinkClose) break;
    state = advance(vocab, state, best);
  }
  state = advance(vocab, state, Vocabulary::kThinkClose);
  state = advance(vocab, state, Vocabulary::kAnswerOpen);

  next_token_logits(policy, params, features, state, z);
  log_softmax(z);
  ClassId best = 0;
  for (std::size_t c = 0; c < num_answers; ++c) {
    const double lp = z[vocab.identifier(static_cast<ClassId>(c))];
    if (answer_probs) (*answer_probs)[c] += std::exp(lp);
    if (lp > z[vocab.identifier(best)]) best = static_cast<ClassId>(c);
  }
  return best;
}

namespace {

ClassId argmax_lowest(const std::vector<double>& scores) {
  ClassId best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[static_cast<std::size_t>(best)]) best = static_cast<ClassId>(c);
  }
  return best;
}

}  // namespace

NodePrediction predict_node(const Policy& policy, const PolicyParams& params,
                            const TextRichNetwork& net, NodeId node, const SampleSpec& spec,
                            std::uint64_t seed, const EvalOptions& opts) {
  validate(spec);
  if (node >= net.num_nodes()) throw DataError("node " + std::to_string(node) + " does not exist");
  if (policy.vocab().num_classes() != net.num_classes()) {
    throw DataError("policy has " + std::to_string(policy.vocab().num_classes()) +
                    " identifiers but the network has " + std::to_string(net.num_classes()) +
                    " classes");
  }
  NodePrediction out;
  out.answer_scores.assign(net.num_classes(), 0.0);
  std::vector<double> first_features;
  for (std::size_t s = 0; s < spec.samples_per_node; ++s) {
    const PromptContext ctx =
        make_node_prompt(net, node, spec, derive_seed(seed, {kNeighbourhoodDomain, node, s}));
    std::vector<double> phi = policy.prompt_features(ctx);
    if (spec.samples_per_node == 1) {
      out.predicted = greedy_answer(policy, params, phi, opts.max_len, &out.answer_scores);
    } else {
      greedy_answer(policy, params, phi, opts.max_len, &out.answer_scores);
    }
    if (s == 0) first_features = std::move(phi);
  }
  // With several samples the summed probabilities decide; with one, the
  // argmax of the log-probabilities above already did.
  if (spec.samples_per_node > 1) out.predicted = argmax_lowest(out.answer_scores);
  out.sampled = rollout(policy, params, first_features, derive_seed(seed, {kSampleDomain, node}),
                        opts.max_len);
  return out;
}

namespace {

EvalResult finish(std::span<const ClassId> preds, std::span<const ClassId> golds,
                  std::size_t num_classes, const Vocabulary& vocab,
                  const std::vector<Rollout>& sampled) {
  EvalResult r = score_predictions(preds, golds, num_classes);
  double len = 0.0;
  for (const Rollout& ro : sampled) len += static_cast<double>(response_length(ro));
  r.mean_resp_len = sampled.empty() ? 0.0 : len / static_cast<double>(sampled.size());
  r.neighbour_freq = neighbour_token_frequency(vocab, sampled);
  return r;
}

}  // namespace

EvalResult evaluate(const Policy& policy, const PolicyParams& params, const TextRichNetwork& net,
                    std::span<const NodeId> nodes, const SampleSpec& spec, std::uint64_t seed,
                    const EvalOptions& opts) {
  if (nodes.empty()) throw DataError("evaluation split is empty");
  std::vector<ClassId> preds(nodes.size());
  std::vector<ClassId> golds(nodes.size());
  std::vector<Rollout> sampled(nodes.size());
  parallel_for(nodes.size(), opts.threads, [&](std::size_t i) {
    const auto gold = net.gold(nodes[i]);
    if (!gold) throw DataError("node " + std::to_string(nodes[i]) + " has no gold label");
    NodePrediction p = predict_node(policy, params, net, nodes[i], spec, seed, opts);
    preds[i] = p.predicted;
    golds[i] = *gold;
    sampled[i] = std::move(p.sampled);
  });
  return finish(preds, golds, net.num_classes(), policy.vocab(), sampled);
}

EvalResult average_results(std::span<const EvalResult> results) {
  if (results.empty()) throw Error("no evaluation results to average");
  EvalResult avg;
  avg.per_class.assign(results.front().per_class.size(), ClassScores{});
  avg.n_evaluated = results.front().n_evaluated;
  avg.n_seeds = results.size();
  const double w = 1.0 / static_cast<double>(results.size());
  for (const EvalResult& r : results) {
    if (r.per_class.size() != avg.per_class.size()) throw Error("results differ in class count");
    avg.accuracy += w * r.accuracy;
    avg.macro_f1 += w * r.macro_f1;
    avg.mean_resp_len += w * r.mean_resp_len;
    avg.neighbour_freq += w * r.neighbour_freq;
    for (std::size_t c = 0; c < avg.per_class.size(); ++c) {
      avg.per_class[c].precision += w * r.per_class[c].precision;
      avg.per_class[c].recall += w * r.per_class[c].recall;
      avg.per_class[c].f1 += w * r.per_class[c].f1;
    }
  }
  return avg;
}

EvalResult evaluate_seeds(const Policy& policy, const PolicyParams& params,
                          const TextRichNetwork& net, std::span<const NodeId> nodes,
                          const SampleSpec& spec, std::uint64_t seed, std::size_t num_seeds,
                          const EvalOptions& opts) {
  if (num_seeds == 0) throw ConfigError("eval.seeds must be >= 1");
  std::vector<EvalResult> results;
  for (std::size_t k = 0; k < num_seeds; ++k) {
    results.push_back(
        evaluate(policy, params, net, nodes, spec, derive_seed(seed, {kSeedDomain, k}), opts));
  }
  return average_results(results);
}

// ---------------------------------------------------------------------------
// Link prediction

std::vector<LinkPair> make_link_pairs(const TextRichNetwork& net, std::uint64_t seed) {
  const std::size_t n = net.num_nodes();
  const std::size_t e = net.num_edges();
  const double all_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  if (e == 0) throw DataError("network has no edges to build link pairs from");
  if (all_pairs - static_cast<double>(e) < static_cast<double>(e)) {
    throw DataError("network is too dense to sample as many non-edges as edges");
  }
  std::vector<LinkPair> pairs;
  pairs.reserve(2 * e);
  for (const auto& [u, v] : net.edges()) pairs.push_back(LinkPair{u, v, 1});
  Rng rng(derive_seed(seed, {kPairDomain}));
  std::set<std::pair<NodeId, NodeId>> negatives;
  while (negatives.size() < e) {
    NodeId u = rng.below(n);
    NodeId v = rng.below(n);
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    if (net.has_edge(u, v)) continue;
    if (negatives.emplace(u, v).second) pairs.push_back(LinkPair{u, v, 0});
  }
  return pairs;
}

PromptContext make_edge_prompt(const TextRichNetwork& net, NodeId u, NodeId v,
                               const SampleSpec& spec, std::uint64_t seed) {
  if (u == v) throw DataError("link pair (" + std::to_string(u) + ", " + std::to_string(v) +
                              ") is a self-pair");
  const PromptContext src = sample_neighbourhood(net, u, spec, seed, v);
  const PromptContext dst = sample_neighbourhood(net, v, spec, seed, u);
  return build_edge_prompt(src, dst, net);
}

EvalResult evaluate_edge(const Policy& policy, const PolicyParams& params,
                         const TextRichNetwork& net, std::span<const LinkPair> pairs,
                         const SampleSpec& spec, std::uint64_t seed, const EvalOptions& opts) {
  validate(spec);
  if (pairs.empty()) throw DataError("no link pairs to evaluate");
  if (policy.vocab().num_classes() < 2) throw DataError("edge evaluation needs identifiers 0 and 1");
  for (const LinkPair& p : pairs) {
    if (p.u == p.v) throw DataError("link pair (" + std::to_string(p.u) + ", " +
                                    std::to_string(p.v) + ") is a self-pair");
    if (p.u >= net.num_nodes() || p.v >= net.num_nodes()) throw DataError("link pair node missing");
    if (p.label != 0 && p.label != 1) throw DataError("link label must be 0 or 1");
  }
  std::vector<ClassId> preds(pairs.size());
  std::vector<ClassId> golds(pairs.size());
  std::vector<Rollout> sampled(pairs.size());
  parallel_for(pairs.size(), opts.threads, [&](std::size_t i) {
    const LinkPair& p = pairs[i];
    std::vector<double> scores(2, 0.0);
    std::vector<double> first;
    for (std::size_t s = 0; s < spec.samples_per_node; ++s) {
      const PromptContext ctx =
          make_edge_prompt(net, p.u, p.v, spec, derive_seed(seed, {kNeighbourhoodDomain, i, s}));
      std::vector<double> phi = policy.prompt_features(ctx);
      preds[i] = greedy_answer(policy, params, phi, opts.max_len, &scores, 2);
      if (s == 0) first = std::move(phi);
    }
    if (spec.samples_per_node > 1) preds[i] = argmax_lowest(scores);
    golds[i] = p.label;
    sampled[i] = rollout(policy, params, first, derive_seed(seed, {kSampleDomain, i}), opts.max_len);
  });
  return finish(preds, golds, 2, policy.vocab(), sampled);
}

std::string to_json(const EvalResult& result) {
  nlohmann::ordered_json j;
  j["accuracy"] = result.accuracy;
  j["macro_f1"] = result.macro_f1;
  j["n_evaluated"] = result.n_evaluated;
  j["n_seeds"] = result.n_seeds;
  j["mean_resp_len"] = result.mean_resp_len;
  j["neighbour_freq"] = result.neighbour_freq;
  auto& pc = j["per_class"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < result.per_class.size(); ++c) {
    nlohmann::ordered_json row;
    row["class"] = c;
    row["precision"] = result.per_class[c].precision;
    row["recall"] = result.per_class[c].recall;
    row["f1"] = result.per_class[c].f1;
    pc.push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Margin distributions

MarginDistribution margin_distribution(std::span<const double> deltas, std::size_t bins) {
  if (bins < 2) throw ConfigError("histogram needs at least 2 bins");
  if (deltas.empty()) throw DataError("no margin gains to summarise");
  MarginDistribution d;
  d.n = deltas.size();
  d.min = deltas.front();
  d.max = deltas.front();
  std::size_t pos = 0, zero = 0, neg = 0;
  for (double x : deltas) {
    if (!std::isfinite(x)) throw DataError("non-finite margin gain");
    d.min = std::min(d.min, x);
    d.max = std::max(d.max, x);
    d.mean += x;
    if (x > kZeroTolerance) {
      ++pos;
    } else if (x < -kZeroTolerance) {
      ++neg;
    } else {
      ++zero;
    }
  }
  const double n = static_cast<double>(d.n);
  d.mean /= n;
  d.frac_positive = static_cast<double>(pos) / n;
  d.frac_zero = static_cast<double>(zero) / n;
  d.frac_negative = static_cast<double>(neg) / n;

  if (d.min == d.max) {
    d.bins.push_back(HistogramBin{d.min, d.max, d.n, 1.0});
    return d;
  }
  const double width = (d.max - d.min) / static_cast<double>(bins);
  d.bins.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    d.bins[b].lo = d.min + width * static_cast<double>(b);
    d.bins[b].hi = b + 1 == bins ? d.max : d.min + width * static_cast<double>(b + 1);
  }
  for (double x : deltas) {
    auto b = static_cast<std::size_t>(std::floor((x - d.min) / width));
    ++d.bins[std::min(b, bins - 1)].count;
  }
  for (auto& bin : d.bins) bin.frac = static_cast<double>(bin.count) / n;
  return d;
}

MarginDistribution margin_distribution_report(std::span<const MarginReport> reports,
                                              std::size_t bins, std::span<const NodeId> nodes) {
  std::vector<double> deltas;
  for (const MarginReport& r : reports) {
    if (nodes.empty()) {
      for (const NodeMargin& m : r.nodes) deltas.push_back(m.delta);
    } else {
      for (NodeId i : nodes) deltas.push_back(r.nodes.at(i).delta);
    }
  }
  return margin_distribution(deltas, bins);
}

std::string histogram_csv(const MarginDistribution& dist) {
  std::string out = "bin_lo,bin_hi,count,frac\n";
  for (const HistogramBin& b : dist.bins) {
    out += format_double(b.lo) + "," + format_double(b.hi) + "," + std::to_string(b.count) + "," +
           format_double(b.frac) + "\n";
  }
  return out;
}

std::string summary_json(const MarginDistribution& dist) {
  nlohmann::ordered_json j;
  j["n"] = dist.n;
  j["mean"] = dist.mean;
  j["min"] = dist.min;
  j["max"] = dist.max;
  j["frac_positive"] = dist.frac_positive;
  j["frac_zero"] = dist.frac_zero;
  j["frac_negative"] = dist.frac_negative;
  j["zero_tolerance"] = kZeroTolerance;
  j["bins"] = dist.bins.size();
  return j.dump(2) + "\n";
}

std::vector<StepMetrics> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != metrics_csv_header()) {
    throw DataError("metrics file " + path.string() + " has an unexpected header");
  }
  std::vector<StepMetrics> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss{std::string(trim(line))};
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cells.size() != 9) throw DataError(where + ": expected 9 columns");
    StepMetrics m;
    m.step = static_cast<std::size_t>(parse_uint(cells[0], where));
    double* fields[] = {&m.mean_reward, &m.objective, &m.kl,          &m.entropy,
                        &m.resp_len,    &m.neighbour_freq, &m.format_rate, &m.acc_rate};
    for (std::size_t k = 0; k < 8; ++k) *fields[k] = parse_double(cells[k + 1], where);
    rows.push_back(m);
  }
  return rows;
}

}  // namespace ngrpo
