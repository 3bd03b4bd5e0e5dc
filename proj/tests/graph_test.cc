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

#include "ngrpo/graph.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "ngrpo/errors.h"
#include "support/generators.h"
#include "support/oracles.h"

namespace ngrpo {
namespace {

TextRichNetwork::Input two_node_input() {
  TextRichNetwork::Input in;
  in.texts = {"first node", "second node"};
  in.edges = {{0, 1}};
  in.labels = {{0, "zero", "0"}, {1, "one", "1"}};
  in.gold = {0, 1};
  in.meta = {"a paper", "citation"};
  return in;
}

TextRichNetwork path3() {
  TextRichNetwork::Input in;
  in.texts = {"a", "b", "c"};
  in.edges = {{0, 1}, {1, 2}};
  in.labels = {{0, "zero", "0"}, {1, "one", "1"}};
  in.gold = {0, 1, 0};
  return TextRichNetwork::create(in);
}

TEST(NetworkTest, TwoNodesOneEdge) {
  const auto net = TextRichNetwork::create(two_node_input());
  EXPECT_EQ(net.num_nodes(), 2u);
  EXPECT_EQ(net.num_edges(), 1u);
  EXPECT_EQ(net.num_classes(), 2u);
  EXPECT_TRUE(net.has_edge(1, 0));
}

TEST(NetworkTest, DanglingEndpointRejected) {
  auto in = two_node_input();
  in.edges.push_back({0, 5});
  EXPECT_THROW(TextRichNetwork::create(in), DataError);
}

TEST(NetworkTest, DuplicateEdgesCanonicalised) {
  auto in = two_node_input();
  in.edges = {{0, 1}, {1, 0}, {0, 1}};
  const auto net = TextRichNetwork::create(in);
  ASSERT_EQ(net.num_edges(), 1u);
  EXPECT_EQ(net.edges()[0], (std::pair<NodeId, NodeId>{0, 1}));
  EXPECT_EQ(net.degree(0), 1u);
}

TEST(NetworkTest, RejectsBadLabels) {
  auto in = two_node_input();
  in.labels = {{0, "zero", "0"}, {2, "two", "2"}};
  EXPECT_THROW(TextRichNetwork::create(in), DataError);
  in = two_node_input();
  in.labels[1].token = "0";
  EXPECT_THROW(TextRichNetwork::create(in), DataError);
  in = two_node_input();
  in.gold = {0, 5};
  EXPECT_THROW(TextRichNetwork::create(in), DataError);
  in = two_node_input();
  in.edges = {{1, 1}};
  EXPECT_THROW(TextRichNetwork::create(in), DataError);
}

TEST(NetworkTest, NeighboursAreSymmetric) {
  test::Gen gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto net = test::random_network(gen, gen.size(2, 30), 3, gen.uniform(0.0, 0.4));
    std::size_t degree_sum = 0;
    for (NodeId u = 0; u < net.num_nodes(); ++u) {
      degree_sum += net.degree(u);
      for (NodeId v : net.neighbours(u)) {
        EXPECT_TRUE(net.has_edge(v, u));
        const auto back = net.neighbours(v);
        EXPECT_NE(std::find(back.begin(), back.end(), u), back.end());
      }
    }
    EXPECT_EQ(degree_sum, 2 * net.num_edges());
  }
}

TEST(JsonlTest, RoundTrip) {
  test::Gen gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    auto in_net = test::random_network(gen, gen.size(1, 20), 4, 0.2);
    const std::string text = to_jsonl(in_net);
    const auto out_net = parse_jsonl(text);
    EXPECT_EQ(to_jsonl(out_net), text);
    EXPECT_EQ(out_net.edges(), in_net.edges());
    EXPECT_EQ(out_net.num_classes(), in_net.num_classes());
  }
}

TEST(JsonlTest, ParsesHandWrittenFile) {
  const std::string text =
      R"({"kind":"meta","node_type":"a paper","relation":"citation",)"
      R"("labels":[{"id":0,"text":"ML","token":"0"},{"id":1,"text":"IR","token":"1"}]})"
      "\n"
      R"({"kind":"node","id":1,"text":"b","gold":1,"edges":[0]})"
      "\n\n"
      R"({"kind":"node","id":0,"text":"a","gold":null,"edges":[1]})"
      "\n";
  const auto net = parse_jsonl(text);
  EXPECT_EQ(net.num_nodes(), 2u);
  EXPECT_EQ(net.num_edges(), 1u);
  EXPECT_FALSE(net.gold(0).has_value());
  EXPECT_EQ(net.gold(1), 1);
  EXPECT_EQ(net.meta().relation, "citation");
}

TEST(JsonlTest, ErrorsNameTheLine) {
  const std::string meta =
      R"({"kind":"meta","node_type":"t","relation":"r",)"
      R"("labels":[{"id":0,"text":"a","token":"0"},{"id":1,"text":"b","token":"1"}]})";
  try {
    parse_jsonl(meta + "\n{\"kind\":\"node\",\"id\":0}\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(parse_jsonl(meta + "\nnot json\n"), DataError);
  EXPECT_THROW(parse_jsonl(meta + "\n{\"kind\":\"node\",\"id\":0,\"text\":\"x\",\"edges\":[5]}\n"),
               DataError);
  EXPECT_THROW(parse_jsonl(meta + "\n{\"kind\":\"node\",\"id\":1,\"text\":\"x\"}\n"), DataError);
  EXPECT_THROW(parse_jsonl("{\"kind\":\"node\",\"id\":0,\"text\":\"x\"}\n"), DataError);
}

TEST(AdjacencyTest, IsolatedNode) {
  TextRichNetwork::Input in;
  in.texts = {"only"};
  in.labels = {{0, "a", "0"}, {1, "b", "1"}};
  const NormalizedAdjacency adj(TextRichNetwork::create(in));
  EXPECT_EQ(adj.size(), 1u);
  EXPECT_EQ(adj.at(0, 0), 1.0);
}

TEST(AdjacencyTest, PathOfThree) {
  const NormalizedAdjacency adj(path3());
  const double inv_sqrt6 = 0.408248290463863;
  EXPECT_NEAR(adj.at(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(adj.at(0, 1), inv_sqrt6, 1e-15);
  EXPECT_NEAR(adj.at(1, 1), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(adj.at(1, 2), inv_sqrt6, 1e-15);
  EXPECT_NEAR(adj.at(2, 2), 0.5, 1e-15);
  EXPECT_EQ(adj.at(0, 2), 0.0);
}

TEST(AdjacencyTest, TwoNodeClique) {
  const NormalizedAdjacency adj(TextRichNetwork::create(two_node_input()));
  for (NodeId u = 0; u < 2; ++u) {
    for (NodeId v = 0; v < 2; ++v) EXPECT_DOUBLE_EQ(adj.at(u, v), 0.5);
  }
}

TEST(AdjacencyTest, MatchesDenseOracle) {
  test::Gen gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto net = test::random_network(gen, gen.size(1, 40), 2, gen.uniform(0.0, 0.3));
    const NormalizedAdjacency adj(net);
    const Matrix dense = test::dense_adjacency(net);
    for (NodeId u = 0; u < net.num_nodes(); ++u) {
      double row_sum = 0.0;
      for (NodeId v = 0; v < net.num_nodes(); ++v) {
        EXPECT_NEAR(adj.at(u, v), dense(u, v), 1e-14);
        EXPECT_EQ(adj.at(u, v), adj.at(v, u));
        row_sum += adj.at(u, v);
      }
      EXPECT_GT(row_sum, 0.0);
      EXPECT_EQ(adj.row_nnz(u), net.degree(u) + 1);
    }
  }
}

TEST(SplitTest, TenNodes) {
  test::Gen gen(1);
  const auto net = test::random_network(gen, 10, 2, 0.2);
  const auto s = split(net, {0.6, 0.2, 0.2}, 7);
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.val.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(SplitTest, DeterministicAndSeedSensitive) {
  test::Gen gen(2);
  const auto net = test::random_network(gen, 1000, 4, 0.0);
  EXPECT_EQ(split(net, {}, 7), split(net, {}, 7));
  EXPECT_NE(split(net, {}, 7), split(net, {}, 8));
}

TEST(SplitTest, RejectsDegenerateInput) {
  test::Gen gen(3);
  EXPECT_THROW(split(test::random_network(gen, 2, 2, 0.5), {}, 1), DataError);
  const auto net = test::random_network(gen, 10, 2, 0.5);
  EXPECT_THROW(split(net, {0.5, 0.5, 0.5}, 1), ConfigError);
  EXPECT_THROW(split(net, {1.0, 0.0, 0.0}, 1), ConfigError);
}

TEST(SplitTest, PartitionAndClassBalanceProperty) {
  test::Gen gen(4);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t classes = gen.size(2, 5);
    const auto net = test::random_network(gen, gen.size(20, 200), classes, 0.0);
    const SplitRatios r{0.6, 0.2, 0.2};
    const auto s = split(net, r, gen.seed());
    std::set<NodeId> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      EXPECT_TRUE(std::is_sorted(part->begin(), part->end()));
      for (NodeId v : *part) EXPECT_TRUE(seen.insert(v).second);
    }
    EXPECT_EQ(seen.size(), net.num_nodes());
    const auto n = static_cast<double>(net.num_nodes());
    EXPECT_EQ(s.train.size(), static_cast<std::size_t>(std::llround(n * r.train)));
    for (std::size_t c = 0; c < classes; ++c) {
      double total = 0.0;
      for (NodeId v = 0; v < net.num_nodes(); ++v) total += net.gold(v) == static_cast<ClassId>(c);
      double in_train = 0.0;
      for (NodeId v : s.train) in_train += net.gold(v) == static_cast<ClassId>(c);
      EXPECT_LE(std::abs(in_train - total * static_cast<double>(s.train.size()) / n), 2.0);
    }
  }
}

TEST(SyntheticTest, Deterministic) {
  SyntheticSpec spec;
  spec.num_nodes = 60;
  EXPECT_EQ(to_jsonl(generate_synthetic(spec)), to_jsonl(generate_synthetic(spec)));
  SyntheticSpec other = spec;
  other.seed = 2;
  EXPECT_NE(to_jsonl(generate_synthetic(spec)), to_jsonl(generate_synthetic(other)));
}

TEST(SyntheticTest, FullHomophilyHasOnlyIntraClassEdges) {
  SyntheticSpec spec;
  spec.homophily = 1.0;
  const auto net = generate_synthetic(spec);
  ASSERT_GT(net.num_edges(), 0u);
  EXPECT_EQ(net.edge_homophily(), 1.0);
}

TEST(SyntheticTest, DefaultHomophilyInRange) {
  const auto net = generate_synthetic(SyntheticSpec{});
  EXPECT_EQ(net.num_nodes(), 300u);
  EXPECT_EQ(net.num_classes(), 4u);
  EXPECT_GE(net.edge_homophily(), 0.75);
  EXPECT_LE(net.edge_homophily(), 0.85);
}

// Share of nodes whose class words come from a vocabulary other than
// their own gold class.
double cross_class_fraction(const SyntheticSpec& spec) {
  const auto net = generate_synthetic(spec);
  const auto vocab = synthetic_vocabulary(spec);
  std::size_t crossed = 0;
  for (NodeId i = 0; i < net.num_nodes(); ++i) {
    const auto& own = vocab.class_words[static_cast<std::size_t>(*net.gold(i))];
    const std::set<std::string> own_set(own.begin(), own.end());
    std::string word;
    bool foreign = false;
    for (char ch : net.text(i) + " ") {
      if (ch != ' ') {
        word += ch;
        continue;
      }
      for (std::size_t c = 0; c < vocab.class_words.size(); ++c) {
        const auto& cw = vocab.class_words[c];
        if (!own_set.count(word) && std::find(cw.begin(), cw.end(), word) != cw.end()) foreign = true;
      }
      word.clear();
    }
    crossed += foreign;
  }
  return static_cast<double>(crossed) / static_cast<double>(net.num_nodes());
}

TEST(SyntheticTest, AmbiguityControlsForeignVocabulary) {
  SyntheticSpec spec;
  spec.ambiguity = 0.0;
  EXPECT_EQ(cross_class_fraction(spec), 0.0);
  spec.ambiguity = 0.3;
  EXPECT_NEAR(cross_class_fraction(spec), 0.3, 0.01);
}

TEST(SyntheticTest, ValidatesSpec) {
  SyntheticSpec spec;
  spec.homophily = 1.5;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.num_classes = 1;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec = {};
  spec.zipf_exponent = -1.0;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

TEST(SyntheticTest, TextLengthAndLabels) {
  SyntheticSpec spec;
  spec.num_nodes = 40;
  spec.label_words = 3;
  const auto net = generate_synthetic(spec);
  for (NodeId i = 0; i < net.num_nodes(); ++i) {
    EXPECT_EQ(static_cast<std::size_t>(std::count(net.text(i).begin(), net.text(i).end(), ' ')) + 1,
              spec.words_per_node);
  }
  for (const auto& lab : net.labels()) {
    EXPECT_EQ(std::count(lab.text.begin(), lab.text.end(), ' '), 2);
    EXPECT_EQ(lab.token, std::to_string(lab.id));
  }
}

}  // namespace
}  // namespace ngrpo
