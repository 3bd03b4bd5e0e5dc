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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"
#include "ngrpo/errors.h"
#include "ngrpo/text_format.h"
#include "support/generators.h"

namespace ngrpo {
namespace {

namespace fs = std::filesystem;

Policy small_policy(std::size_t classes, double prior = 3.0) {
  return Policy::for_classes(classes, PolicyConfig{12, 3, prior, default_reason_words()});
}

TEST(MacroF1Test, FixedCases) {
  const std::vector<ClassId> preds = {0, 0, 1};
  const std::vector<ClassId> golds = {0, 1, 1};
  EXPECT_NEAR(macro_f1(preds, golds, 2), 2.0 / 3.0, 1e-9);
  const auto per = per_class_scores(preds, golds, 2);
  EXPECT_NEAR(per[0].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(per[1].f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(macro_f1(golds, golds, 2), 1.0);
}

TEST(MacroF1Test, AbsentClassCountsAsZero) {
  const std::vector<ClassId> v = {0, 1, 0};
  EXPECT_NEAR(macro_f1(v, v, 3), 2.0 / 3.0, 1e-12);
}

TEST(MacroF1Test, SingleClassPredictions) {
  // Gold uniform over 4 classes, every prediction 0: F1(0) = 2*0.25*1/1.25 = 0.4.
  const std::vector<ClassId> golds = {0, 1, 2, 3, 0, 1, 2, 3};
  const std::vector<ClassId> preds(8, 0);
  EXPECT_NEAR(macro_f1(preds, golds, 4), 0.4 / 4.0, 1e-12);
}

TEST(MacroF1Test, DiagonalConfusionProperty) {
  test::Gen gen(91);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t classes = gen.size(2, 6);
    std::vector<ClassId> golds(gen.size(1, 40));
    for (ClassId& g : golds) g = static_cast<ClassId>(gen.size(0, classes - 1));
    auto preds = golds;
    const auto r = score_predictions(preds, golds, classes);
    EXPECT_EQ(r.accuracy, 1.0);
    // Classes absent from gold score 0, so macro-F1 equals the present share.
    std::set<ClassId> present(golds.begin(), golds.end());
    EXPECT_NEAR(r.macro_f1, static_cast<double>(present.size()) / static_cast<double>(classes), 1e-12);

    for (ClassId& p : preds) {
      if (gen.coin(0.3)) p = static_cast<ClassId>(gen.size(0, classes - 1));
    }
    const auto noisy = score_predictions(preds, golds, classes);
    EXPECT_GE(noisy.macro_f1, 0.0);
    EXPECT_LE(noisy.macro_f1, 1.0);
    for (const auto& s : noisy.per_class) {
      EXPECT_GE(s.f1, 0.0);
      EXPECT_LE(s.f1, 1.0);
    }
  }
}

TEST(MacroF1Test, LengthMismatch) {
  EXPECT_THROW(macro_f1(std::vector<ClassId>{0}, std::vector<ClassId>{0, 1}, 2), Error);
}

TEST(GreedyAnswerTest, DominantIdentifierWins) {
  const Policy p = small_policy(5);
  PolicyParams params = PolicyParams::zeros(p);
  params.state_offset(SchemaState::kAnswer, p.vocab().identifier(3)) = 10.0;
  const std::vector<double> phi(12, 0.2);
  EXPECT_EQ(greedy_answer(p, params, phi, 16), 3);
}

TEST(GreedyAnswerTest, UniformPicksLowestClass) {
  const Policy p = small_policy(5, 0.0);
  const std::vector<double> phi(12, 0.2);
  std::vector<double> probs;
  EXPECT_EQ(greedy_answer(p, PolicyParams::zeros(p), phi, 16, &probs), 0);
  ASSERT_EQ(probs.size(), 5u);
  for (double q : probs) EXPECT_NEAR(q, 1.0 / static_cast<double>(p.vocab().size()), 1e-15);
}

TEST(EvaluateTest, UniformPolicyScoresClassZeroShare) {
  SyntheticSpec spec;
  spec.num_nodes = 80;
  const auto net = generate_synthetic(spec);
  const Policy p = small_policy(net.num_classes(), 0.0);
  std::vector<NodeId> nodes(net.num_nodes());
  for (NodeId i = 0; i < nodes.size(); ++i) nodes[i] = i;
  const auto r = evaluate(p, PolicyParams::zeros(p), net, nodes, SampleSpec{}, 1);
  EXPECT_EQ(r.n_evaluated, 80u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.25);
  EXPECT_THROW(evaluate(p, PolicyParams::zeros(p), net, std::vector<NodeId>{}, SampleSpec{}, 1),
               DataError);
}

TEST(EvaluateTest, OrderAndThreadInvariant) {
  SyntheticSpec spec;
  spec.num_nodes = 60;
  const auto net = generate_synthetic(spec);
  test::Gen gen(92);
  const Policy p = small_policy(net.num_classes());
  const auto params = test::random_params(gen, p, 0.5);
  std::vector<NodeId> nodes = {5, 1, 9, 22, 40};
  const auto a = evaluate(p, params, net, nodes, SampleSpec{3, 64, 2}, 7);
  std::vector<NodeId> reversed(nodes.rbegin(), nodes.rend());
  const auto b = evaluate(p, params, net, reversed, SampleSpec{3, 64, 2}, 7, EvalOptions{16, 3});
  EXPECT_EQ(a.accuracy, b.accuracy);
  EXPECT_EQ(a.mean_resp_len, b.mean_resp_len);
  EXPECT_EQ(a.neighbour_freq, b.neighbour_freq);
  EXPECT_EQ(to_json(a), to_json(b));
}

TEST(EvaluateSeedsTest, AveragesSeeds) {
  SyntheticSpec spec;
  spec.num_nodes = 40;
  const auto net = generate_synthetic(spec);
  test::Gen gen(93);
  const Policy p = small_policy(net.num_classes());
  const auto params = test::random_params(gen, p, 0.5);
  const std::vector<NodeId> nodes = {0, 1, 2, 3, 4, 5};
  const auto r = evaluate_seeds(p, params, net, nodes, SampleSpec{}, 3, 4);
  EXPECT_EQ(r.n_seeds, 4u);
  std::vector<EvalResult> parts;
  for (std::size_t k = 0; k < 4; ++k) {
    parts.push_back(evaluate(p, params, net, nodes, SampleSpec{}, derive_seed(3, {k})));
  }
  EXPECT_NEAR(r.accuracy, average_results(parts).accuracy, 1e-15);
}

TEST(LinkPairsTest, BalancedAndDistinct) {
  test::Gen gen(94);
  for (int trial = 0; trial < 10; ++trial) {
    const auto net = test::random_network(gen, gen.size(10, 40), 2, 0.15);
    if (net.num_edges() == 0) continue;
    const auto pairs = make_link_pairs(net, gen.seed());
    std::size_t pos = 0;
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& pr : pairs) {
      EXPECT_NE(pr.u, pr.v);
      EXPECT_EQ(pr.label == 1, net.has_edge(pr.u, pr.v));
      EXPECT_TRUE(seen.insert({std::min(pr.u, pr.v), std::max(pr.u, pr.v)}).second);
      pos += pr.label;
    }
    EXPECT_EQ(pos, net.num_edges());
    EXPECT_EQ(pairs.size(), 2 * net.num_edges());
  }
}

TEST(EdgeEvalTest, UniformPolicyAtChance) {
  SyntheticSpec spec;
  spec.num_nodes = 120;
  const auto net = generate_synthetic(spec);
  const Policy p = small_policy(2, 0.0);
  const auto pairs = make_link_pairs(net, 5);
  const auto r = evaluate_edge(p, PolicyParams::zeros(p), net, pairs, SampleSpec{}, 1);
  EXPECT_NEAR(r.accuracy, 0.5, 0.05);
}

TEST(EdgeEvalTest, DominantLinkTokenPredictsLink) {
  test::Gen gen(95);
  const auto net = test::random_network(gen, 6, 2, 1.0);
  const Policy p = small_policy(2);
  PolicyParams params = PolicyParams::zeros(p);
  params.bias(p.vocab().identifier(1)) = 20.0;
  const std::vector<LinkPair> one = {{0, 1, 1}};
  EXPECT_EQ(evaluate_edge(p, params, net, one, SampleSpec{}, 1).accuracy, 1.0);
  EXPECT_THROW(evaluate_edge(p, params, net, std::vector<LinkPair>{{2, 2, 0}}, SampleSpec{}, 1),
               DataError);
}

TEST(HistogramTest, AllZero) {
  const std::vector<double> d(10, 0.0);
  const auto dist = margin_distribution(d, 20);
  ASSERT_EQ(dist.bins.size(), 1u);
  EXPECT_EQ(dist.bins[0].frac, 1.0);
  EXPECT_EQ(dist.frac_zero, 1.0);
  EXPECT_THROW(margin_distribution(std::vector<double>{}, 4), DataError);
}

TEST(HistogramTest, SymmetricPair) {
  const auto dist = margin_distribution(std::vector<double>{-1.0, 1.0}, 2);
  ASSERT_EQ(dist.bins.size(), 2u);
  EXPECT_EQ(dist.mean, 0.0);
  EXPECT_EQ(dist.bins[0].count, 1u);
  EXPECT_EQ(dist.bins[1].count, 1u);
  EXPECT_EQ(dist.bins[0].lo, -1.0);
  EXPECT_EQ(dist.bins[1].hi, 1.0);
  EXPECT_EQ(histogram_csv(dist), "bin_lo,bin_hi,count,frac\n-1,0,1,0.5\n0,1,1,0.5\n");
}

TEST(HistogramTest, CountsProperty) {
  test::Gen gen(96);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = gen.normals(gen.size(1, 100));
    const std::size_t bins = gen.size(2, 12);
    const auto dist = margin_distribution(d, bins);
    std::size_t total = 0;
    double frac = 0.0;
    for (std::size_t b = 0; b < dist.bins.size(); ++b) {
      total += dist.bins[b].count;
      frac += dist.bins[b].frac;
      if (b) EXPECT_EQ(dist.bins[b].lo, dist.bins[b - 1].hi);
    }
    EXPECT_EQ(total, d.size());
    EXPECT_NEAR(frac, 1.0, 1e-12);
    EXPECT_NEAR(dist.frac_positive + dist.frac_zero + dist.frac_negative, 1.0, 1e-12);
    EXPECT_EQ(dist.min, *std::min_element(d.begin(), d.end()));
  }
}

TEST(HistogramTest, AmbiguousNodesGainFromNeighbours) {
  SyntheticSpec spec;
  const auto net = generate_synthetic(spec);
  const auto vocab = synthetic_vocabulary(spec);
  const auto table = hash_embed_network(net, 1024, 7);
  const auto report = margin_gain(net, table, 1);
  std::vector<NodeId> ambiguous;
  for (NodeId i = 0; i < net.num_nodes(); ++i) {
    const auto& own = vocab.class_words[static_cast<std::size_t>(*net.gold(i))];
    bool has_own = false;
    for (std::string_view w : split_whitespace(net.text(i))) {
      has_own |= std::find(own.begin(), own.end(), w) != own.end();
    }
    if (!has_own) ambiguous.push_back(i);
  }
  ASSERT_GT(ambiguous.size(), 30u);
  const std::vector<MarginReport> reports = {report};
  const auto dist = margin_distribution_report(reports, 10, ambiguous);
  EXPECT_EQ(dist.n, ambiguous.size());
  EXPECT_GT(dist.frac_positive, 0.5);
}

TEST(JsonTest, EvalResultFields) {
  const std::vector<ClassId> preds = {0, 0, 1};
  const std::vector<ClassId> golds = {0, 1, 1};
  const auto j = nlohmann::json::parse(to_json(score_predictions(preds, golds, 2)));
  EXPECT_NEAR(j.at("accuracy").get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(j.at("macro_f1").get<double>(), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(j.at("per_class").size(), 2u);
  EXPECT_EQ(j.at("n_evaluated").get<int>(), 3);
}

TEST(MetricsReadTest, RoundTrip) {
  const fs::path path = fs::temp_directory_path() / "ngrpo_metrics_rt.csv";
  StepMetrics a;
  a.step = 0;
  a.mean_reward = 0.125;
  a.kl = 1e-17;
  StepMetrics b = a;
  b.step = 1;
  b.acc_rate = 0.3;
  {
    std::ofstream out(path);
    out << metrics_csv_header() << "\n" << metrics_csv_row(a) << "\n" << metrics_csv_row(b) << "\n";
  }
  const auto rows = read_metrics_csv(path);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(metrics_csv_row(rows[0]), metrics_csv_row(a));
  EXPECT_EQ(metrics_csv_row(rows[1]), metrics_csv_row(b));
  {
    std::ofstream out(path);
    out << "step,wrong\n";
  }
  EXPECT_THROW(read_metrics_csv(path), DataError);
  fs::remove(path);
}

}  // namespace
}  // namespace ngrpo
