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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ngrpo/embed_margin.h"
#include "ngrpo/eval_report.h"
#include "ngrpo/experiment.h"
#include "ngrpo/graph.h"
#include "ngrpo/grpo.h"
#include "ngrpo/policy.h"
#include "ngrpo/prompt.h"
#include "ngrpo/reward.h"
#include "ngrpo/run_config.h"
#include "support/generators.h"
#include "support/golden.h"
#include "support/oracles.h"

namespace ngrpo {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Collects the first few failure messages of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  void note(const std::string& what) { info_ += (info_.empty() ? "" : ", ") + what; }
  bool ok() const { return failures_ == 0; }

  bool report(int id, const std::string& title) const {
    std::printf("criterion %d %s: %s", id, ok() ? "PASS" : "FAIL", title.c_str());
    if (!info_.empty()) std::printf(" [%s]", info_.c_str());
    if (!ok()) std::printf(" failures=%d: %s", failures_, notes_.c_str());
    std::printf("\n");
    std::fflush(stdout);
    return ok();
  }

 private:
  int failures_ = 0;
  std::string notes_;
  std::string info_;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

double kink_distance(const test::PolicyInstance& inst, double eps) {
  double best = std::numeric_limits<double>::infinity();
  for (const Rollout& r : inst.group.rollouts) {
    const auto lp = token_logprobs(inst.policy, inst.params, inst.group.features, r.tokens);
    for (std::size_t t = 0; t < lp.size(); ++t) {
      const double ratio = std::exp(lp[t] - r.logprobs_old[t]);
      best = std::min({best, std::abs(ratio - (1 - eps)), std::abs(ratio - (1 + eps))});
    }
  }
  return best;
}

bool objective_math() {
  Check c;
  const auto start = Clock::now();
  test::Gen gen(1001);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t g = gen.size(2, 16);
    std::vector<double> r(g);
    const double scale = std::pow(10.0, gen.uniform(-3.0, 3.0));
    for (double& x : r) x = scale * gen.normal();
    if (trial % 10 == 0) std::fill(r.begin(), r.end(), r[0]);

    const auto dr = advantages_drgrpo(r);
    const double sum = std::accumulate(dr.begin(), dr.end(), 0.0);
    c.expect(std::abs(sum) < 1e-9 * static_cast<double>(g) * std::max(1.0, scale),
             "Dr.GRPO advantages sum to " + fmt(sum));

    const auto a = advantages_grpo(r);
    double rm = 0.0;
    for (double x : r) rm += x / static_cast<double>(g);
    double rv = 0.0;
    for (double x : r) rv += (x - rm) * (x - rm) / static_cast<double>(g);
    double mean = 0.0;
    double var = 0.0;
    for (double x : a) mean += x / static_cast<double>(g);
    for (double x : a) var += (x - mean) * (x - mean) / static_cast<double>(g);
    if (std::sqrt(rv) >= 1e-12) {
      c.expect(std::abs(mean) < 1e-9 && std::abs(var - 1.0) < 1e-9,
               "GRPO moments " + fmt(mean) + "/" + fmt(var));
    } else {
      c.expect(std::all_of(a.begin(), a.end(), [](double x) { return x == 0.0; }),
               "GRPO degenerate group not zero");
    }

    // KL(theta, theta) = 0 on a random instance.
    const auto inst = test::random_instance(gen, true);
    const auto res = surrogate_objective(inst.policy, inst.params, inst.params, inst.group, 0.2,
                                         gen.uniform(0.0, 1.0));
    c.expect(res.kl_sum == 0.0, "KL(theta,theta) = " + fmt(res.kl_sum));
  }

  // One token with ratio 1.5 and eps 0.2.
  const Policy policy = Policy::for_classes(2, PolicyConfig{3, 1, 1.0, {"neighbour"}});
  const PolicyParams params = PolicyParams::zeros(policy);
  for (double adv : {2.0, -2.0}) {
    RolloutGroup group;
    group.features = {0.1, 0.2, 0.3};
    Rollout r;
    r.tokens = {Vocabulary::kThinkOpen};
    r.logprobs_old = {token_logprobs(policy, params, group.features, r.tokens)[0] - std::log(1.5)};
    group.rollouts = {r, r};
    group.advantages = {adv, adv};
    const auto res = surrogate_objective(policy, params, params, group, 0.2, 0.0);
    const double expected = adv > 0 ? 1.2 * adv : 1.5 * adv;
    c.expect(std::abs(res.objective - expected) < 1e-12,
             "clip objective " + fmt(res.objective, 17) + " vs " + fmt(expected));
    if (adv > 0) {
      const bool zero = std::all_of(res.grad.flat().begin(), res.grad.flat().end(),
                                    [](double x) { return x == 0.0; });
      c.expect(zero, "clipped branch has nonzero gradient");
    }
  }
  const double secs = seconds_since(start);
  c.expect(secs < 5.0, "took " + fmt(secs) + " s");
  c.note("1000 instances in " + fmt(secs, 3) + " s");
  return c.report(1, "objective math");
}

bool gradient_check() {
  Check c;
  const auto start = Clock::now();
  test::Gen gen(1002);
  int checked = 0;
  double worst = 0.0;
  while (checked < 50) {
    const double eps = gen.uniform(0.1, 0.3);
    const double beta = gen.coin() ? 0.0 : gen.uniform(0.0, 0.5);
    const auto inst = test::random_instance(gen, gen.coin(0.2));
    // The clipped surrogate has kinks at the clip boundaries where a central
    // difference straddling the kink is meaningless.
    if (kink_distance(inst, eps) < 1e-3) continue;
    c.expect(inst.policy.vocab().size() <= 12 && inst.policy.config().feature_dim <= 8 &&
                 inst.group.rollouts.size() <= 4,
             "instance exceeds size bounds");
    const auto res = surrogate_objective(inst.policy, inst.params, inst.ref, inst.group, eps, beta);
    const auto fd = test::finite_difference(
        [&](const PolicyParams& p) {
          return surrogate_objective(inst.policy, p, inst.ref, inst.group, eps, beta).objective;
        },
        inst.params, 1e-5);
    const double err = test::relative_error(res.grad.flat(), fd);
    worst = std::max(worst, err);
    c.expect(err < 1e-4, "relative error " + fmt(err));
    ++checked;
  }
  const double secs = seconds_since(start);
  c.expect(secs < 30.0, "took " + fmt(secs) + " s");
  c.note("50 instances, worst relative error " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s");
  return c.report(2, "gradient vs central finite differences");
}

bool reinforce_oracle() {
  Check c;
  test::Gen gen(1003);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = test::random_instance(gen, true);
    const auto res = surrogate_objective(inst.policy, inst.params, inst.ref, inst.group, 0.2, 0.0);
    const auto oracle = test::reinforce_gradient(inst.policy, inst.params, inst.group);
    for (std::size_t k = 0; k < oracle.flat().size(); ++k) {
      const double d = std::abs(res.grad.flat()[k] - oracle.flat()[k]);
      worst = std::max(worst, d);
      c.expect(d < 1e-8, "element " + std::to_string(k) + " differs by " + fmt(d));
    }
  }
  c.note("20 instances, worst elementwise difference " + fmt(worst, 3));
  return c.report(3, "on-policy gradient equals REINFORCE oracle");
}

bool margin_oracle() {
  Check c;
  test::Gen gen(1004);
  double worst = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = test::random_network(gen, gen.size(2, 50), gen.size(2, 5), gen.uniform(0, 0.2));
    EmbeddingTable t;
    t.dim = gen.size(2, 8);
    t.node_vecs = test::random_matrix(gen, net.num_nodes(), t.dim);
    t.label_vecs = test::random_matrix(gen, net.num_classes(), t.dim);
    const std::size_t k = gen.size(0, 3);
    const Matrix agg = test::dense_power_apply(test::dense_adjacency(net), t.node_vecs, k);
    const Matrix fast = sgc_aggregate(NormalizedAdjacency(net), t.node_vecs, k);
    for (std::size_t i = 0; i < agg.data().size(); ++i) {
      worst = std::max(worst, std::abs(fast.data()[i] - agg.data()[i]));
    }
    const auto report = margin_gain(net, t, k);
    for (NodeId i = 0; i < net.num_nodes(); ++i) {
      const ClassId gold = *net.gold(i);
      std::vector<double> raw(net.num_classes());
      std::vector<double> smooth(net.num_classes());
      for (std::size_t cl = 0; cl < net.num_classes(); ++cl) {
        for (std::size_t d = 0; d < t.dim; ++d) {
          raw[cl] += t.node_vecs(i, d) * t.label_vecs(cl, d);
          smooth[cl] += agg(i, d) * t.label_vecs(cl, d);
        }
      }
      const double delta = test::brute_margin(smooth, gold) - test::brute_margin(raw, gold);
      worst = std::max(worst, std::abs(report.nodes[i].delta - delta));
      if (k == 0) c.expect(report.nodes[i].delta == 0.0, "K=0 gave nonzero delta");
    }
  }
  c.expect(worst < 1e-10, "oracle difference " + fmt(worst));

  // Path 0-1-2.
  TextRichNetwork::Input p3;
  p3.texts = {"a", "b", "c"};
  p3.edges = {{0, 1}, {1, 2}};
  p3.labels = {{0, "a", "0"}, {1, "b", "1"}};
  p3.gold = {0, 1, 0};
  const NormalizedAdjacency adj(TextRichNetwork::create(p3));
  const double s6 = 1.0 / std::sqrt(6.0);
  const auto near = [](double a, double b) { return std::abs(a - b) <= 1e-15; };
  c.expect(near(adj.at(0, 0), 0.5) && near(adj.at(1, 1), 1.0 / 3.0) && near(adj.at(2, 2), 0.5),
           "path diagonal");
  c.expect(adj.at(0, 2) == 0.0, "path corner");
  c.expect(std::abs(adj.at(0, 1) - s6) < 1e-15 && std::abs(adj.at(1, 2) - s6) < 1e-15,
           "path off-diagonal");

  // Two-node clique with one-hot embeddings and labels.
  TextRichNetwork::Input two;
  two.texts = {"a", "b"};
  two.edges = {{0, 1}};
  two.labels = {{0, "a", "0"}, {1, "b", "1"}};
  two.gold = {0, 1};
  const auto clique = TextRichNetwork::create(two);
  EmbeddingTable t;
  t.dim = 2;
  t.node_vecs = Matrix(2, 2);
  t.node_vecs(0, 0) = t.node_vecs(1, 1) = 1.0;
  t.label_vecs = t.node_vecs;
  const Matrix smooth = sgc_aggregate(NormalizedAdjacency(clique), t.node_vecs, 1);
  c.expect(near(smooth(0, 0), 0.5) && near(smooth(0, 1), 0.5) && near(smooth(1, 0), 0.5) &&
               near(smooth(1, 1), 0.5),
           "clique aggregate");
  const auto rep = margin_gain(clique, t, 1);
  c.expect(near(rep.nodes[0].raw_margin, 1.0) && near(rep.nodes[0].agg_margin, 0.0) &&
               near(rep.nodes[0].delta, -1.0),
           "clique margins");
  for (const auto& m : margin_gain(clique, t, 0).nodes) {
    c.expect(m.delta == 0.0 && m.reshape == 1.0, "K=0 on clique");
  }
  c.expect(reshape_factor(0.0, 10.0) == 1.0 && reshape_factor(-0.0, 0.5) == 1.0,
           "zero delta does not give g = 1");
  c.expect(shaped_reward(2.0, reshape_factor(0.0, 10.0)) == 2.0, "reward changed at delta 0");
  c.note("30 graphs, worst difference " + fmt(worst, 3));
  return c.report(4, "margin gain matches dense oracle");
}

RunConfig learning_config(std::uint64_t seed, bool shaping) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.trainer.threads = 1;
  cfg.trainer.shaping = shaping;
  return cfg;
}

struct SeedRun {
  TrainingRun run;
  double final_accuracy = 0.0;
  double seconds = 0.0;
};

SeedRun train(const Experiment& exp, const RunConfig& cfg) {
  SeedRun out;
  const auto start = Clock::now();
  out.run = run_training(exp, cfg);
  out.final_accuracy = out.run.evals.empty() ? evaluate_test(exp, cfg, out.run.state.params).accuracy
                                             : out.run.evals.back().result.accuracy;
  out.seconds = seconds_since(start);
  return out;
}

std::string metrics_stream(const TrainingRun& run) {
  std::string s;
  for (const StepMetrics& m : run.metrics) s += metrics_csv_row(m) + "\n";
  return s;
}

struct EndToEnd {
  bool c5 = false;
  bool c6 = false;
  bool c7 = false;
};

EndToEnd end_to_end() {
  EndToEnd out;
  RunConfig base = learning_config(1, true);
  base.eval_every = base.trainer.steps;  // step 0 and the final step
  const Experiment exp = prepare_experiment(base);

  // Criterion 5.
  Check c5;
  const SeedRun first = train(exp, base);
  const SeedRun second = train(exp, base);
  const double acc0 = first.run.evals.front().result.accuracy;
  const double acc_end = first.final_accuracy;
  c5.expect(exp.net.num_nodes() == 300 && exp.net.num_classes() == 4, "dataset shape");
  c5.expect(std::abs(acc0 - 0.25) <= 0.05, "step-0 accuracy " + fmt(acc0));
  c5.expect(acc_end >= 0.70, "step-400 accuracy " + fmt(acc_end));
  c5.expect(first.seconds < 120.0, "runtime " + fmt(first.seconds) + " s");
  c5.expect(metrics_stream(first.run) == metrics_stream(second.run), "metrics differ across runs");
  c5.note("homophily " + fmt(exp.net.edge_homophily(), 3));
  c5.note("accuracy " + fmt(acc0, 3) + " -> " + fmt(acc_end, 3));
  c5.note("runtime " + fmt(first.seconds, 3) + " s");
  c5.note(metrics_stream(first.run) == metrics_stream(second.run) ? "metrics bit-identical"
                                                                  : "metrics differ");
  out.c5 = c5.report(5, "end-to-end learning");

  // Criterion 6: paired seeds at the same step budget.
  Check c6;
  int wins = 0;
  std::string pairs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    RunConfig shaped = learning_config(seed, true);
    RunConfig plain = learning_config(seed, false);
    const double a = seed == 1 ? first.final_accuracy : train(exp, shaped).final_accuracy;
    const double b = train(exp, plain).final_accuracy;
    if (a > b) ++wins;
    pairs += (pairs.empty() ? "" : " ") + fmt(a, 3) + "/" + fmt(b, 3);
  }
  c6.expect(wins >= 4, "shaped wins " + std::to_string(wins) + " of 5");
  // Smoothed curve: means over four equal blocks of the training run.
  const auto& m = first.run.metrics;
  const std::size_t blocks = 4;
  const std::size_t per = m.size() / blocks;
  std::vector<double> curve;
  for (std::size_t b = 0; b < blocks; ++b) {
    double sum = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) sum += m[i].neighbour_freq;
    curve.push_back(sum / static_cast<double>(per));
  }
  std::string curve_text;
  for (std::size_t b = 0; b < curve.size(); ++b) {
    curve_text += (b ? " " : "") + fmt(curve[b], 3);
    if (b > 0) c6.expect(curve[b] >= curve[b - 1], "neighbour frequency fell in block " + std::to_string(b + 1));
  }
  c6.note("shaped/unshaped accuracy " + pairs);
  c6.note("wins " + std::to_string(wins) + "/5");
  c6.note("neighbour frequency blocks " + curve_text);
  out.c6 = c6.report(6, "shaping ablation and neighbour frequency");

  // Criterion 7.
  Check c7;
  const PolicyParams zero = PolicyParams::zeros(exp.policy);
  const std::vector<double> features(exp.policy.config().feature_dim, 0.0);
  const double p0 = schema_probability(exp.policy, zero, features, base.trainer.max_len);
  const double n0 = static_cast<double>(base.trainer.batch_prompts * base.trainer.group_size);
  const double sigma = std::sqrt(p0 * (1.0 - p0) / n0);
  const double rate0 = m.front().format_rate;
  c7.expect(std::abs(rate0 - p0) <= 4.0 * sigma,
            "step-1 format rate " + fmt(rate0) + " vs enumerated " + fmt(p0));
  const std::size_t window = 20;
  double tail = 0.0;
  for (std::size_t i = m.size() - window; i < m.size(); ++i) tail += m[i].format_rate;
  tail /= static_cast<double>(window);
  c7.expect(tail >= 0.95, "final format rate " + fmt(tail));
  c7.note("enumerated " + fmt(p0, 4) + ", first batch " + fmt(rate0, 4) + ", last " +
          std::to_string(window) + " steps " + fmt(tail, 4));
  out.c7 = c7.report(7, "format learning");
  return out;
}

bool evaluation_correctness() {
  Check c;
  const std::vector<ClassId> golds{0, 0, 1};
  const std::vector<ClassId> preds{0, 1, 1};
  const double f1 = macro_f1(preds, golds, 2);
  c.expect(std::abs(f1 - 2.0 / 3.0) < 1e-15, "macro F1 " + fmt(f1, 17));
  test::Gen gen(1008);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = gen.size(2, 6);
    // Every class appears; an absent class scores F1 = 0 by convention.
    std::vector<ClassId> g(gen.size(k, 40));
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = static_cast<ClassId>(i < k ? i : gen.size(0, k - 1));
    }
    const EvalResult r = score_predictions(g, g, k);
    c.expect(std::abs(r.macro_f1 - r.accuracy) < 1e-15, "diagonal macro F1 " + fmt(r.macro_f1));
  }
  const TextRichNetwork net = generate_synthetic(SyntheticSpec{});
  const Policy policy = Policy::for_classes(2, PolicyConfig{});
  const auto pairs = make_link_pairs(net, 5);
  std::size_t positives = 0;
  for (const LinkPair& p : pairs) positives += p.label;
  c.expect(2 * positives == pairs.size(), "link pairs not balanced");
  const double acc = evaluate_edge(policy, PolicyParams::zeros(policy), net, pairs, SampleSpec{}, 1).accuracy;
  c.expect(std::abs(acc - 0.5) <= 0.05, "edge accuracy " + fmt(acc));
  c.note("edge accuracy under uniform policy " + fmt(acc, 4) + " on " + std::to_string(pairs.size()) +
         " pairs");
  return c.report(8, "evaluation correctness");
}

bool prompt_conformance() {
  Check c;
  c.expect(test::golden_node_prompt() == test::read_golden("node_prompt.txt"), "node prompt");
  c.expect(test::golden_edge_prompt() == test::read_golden("edge_prompt.txt"), "edge prompt");
  c.expect(test::golden_graph_prompt() == test::read_golden("graph_prompt.txt"), "graph prompt");
  c.expect(test::read_golden("node_prompt.txt").find("predict the category ID") != std::string::npos,
           "node instruction");
  c.expect(test::read_golden("edge_prompt.txt").find("predict whether a link exists") !=
               std::string::npos,
           "edge instruction");
  c.expect(test::read_golden("graph_prompt.txt").find("0 means support and 1 means counter") !=
               std::string::npos,
           "graph instruction");
  return c.report(9, "prompt templates match golden files");
}

}  // namespace
}  // namespace ngrpo

int main() {
  using namespace ngrpo;
  bool ok = true;
  ok &= objective_math();
  ok &= gradient_check();
  ok &= reinforce_oracle();
  ok &= margin_oracle();
  const EndToEnd e2e = end_to_end();
  ok &= e2e.c5 && e2e.c6 && e2e.c7;
  ok &= evaluation_correctness();
  ok &= prompt_conformance();
  std::printf("%s\n", ok ? "ALL PASS" : "SOME CRITERIA FAILED");
  return ok ? 0 : 1;
}
