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

#ifndef NGRPO_GRAPH_H_
#define NGRPO_GRAPH_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ngrpo/matrix.h"

namespace ngrpo {

// Node ids are dense: a network with n nodes uses ids 0..n-1.
using NodeId = std::size_t;
using ClassId = int;

struct LabelInfo {
  ClassId id = 0;
  std::string text;
  // Identifier token shown to the policy for this class.
  std::string token;
};

struct NetworkMeta {
  std::string node_type;
  std::string relation;
};

// Text-rich network with undirected, canonicalised edges (u < v).
class TextRichNetwork {
 public:
  struct Input {
    std::vector<std::string> texts;  // texts[i] is the text of node i
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<LabelInfo> labels;
    std::vector<std::optional<ClassId>> gold;  // empty or one entry per node
    NetworkMeta meta;
  };

  // Validates `input` and canonicalises its edge list. Throws DataError.
  static TextRichNetwork create(Input input);

  std::size_t num_nodes() const { return texts_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t num_classes() const { return labels_.size(); }

  const std::string& text(NodeId node) const { return texts_.at(node); }
  std::span<const NodeId> neighbours(NodeId node) const;
  std::size_t degree(NodeId node) const { return neighbours(node).size(); }
  std::optional<ClassId> gold(NodeId node) const { return gold_.at(node); }

  // Canonical edges, sorted lexicographically, u < v.
  const std::vector<std::pair<NodeId, NodeId>>& edges() const { return edges_; }
  bool has_edge(NodeId u, NodeId v) const;

  const std::vector<LabelInfo>& labels() const { return labels_; }
  const NetworkMeta& meta() const { return meta_; }

  // Fraction of edges whose endpoints share a gold label (labelled edges only).
  double edge_homophily() const;

 private:
  std::vector<std::string> texts_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<NodeId> adj_;
  std::vector<LabelInfo> labels_;
  std::vector<std::optional<ClassId>> gold_;
  NetworkMeta meta_;
};

// JSONL dataset: one "meta" record and one "node" record per node.
TextRichNetwork load_jsonl(const std::filesystem::path& path);
TextRichNetwork parse_jsonl(std::string_view content);
std::string to_jsonl(const TextRichNetwork& net);
void save_jsonl(const TextRichNetwork& net, const std::filesystem::path& path);

// D^{-1/2} (A + I) D^{-1/2} in CSR form, degrees counting the self-loop.
class NormalizedAdjacency {
 public:
  explicit NormalizedAdjacency(const TextRichNetwork& net);

  std::size_t size() const { return row_offsets_.size() - 1; }
  std::size_t row_nnz(std::size_t row) const {
    return row_offsets_[row + 1] - row_offsets_[row];
  }
  // Entry (u, v); zero when not stored.
  double at(std::size_t u, std::size_t v) const;

  // Returns this * input.
  Matrix multiply(const Matrix& input) const;

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& columns() const { return columns_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

inline NormalizedAdjacency normalized_adjacency(const TextRichNetwork& net) {
  return NormalizedAdjacency(net);
}

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct SplitAssignment {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  bool operator==(const SplitAssignment&) const = default;
};

// Seeded random split. Nodes are shuffled within each gold class and dealt
// round-robin across classes before cutting, so every part is close to
// class-balanced. Part sizes are round(n * ratio) with the test part taking
// the remainder.
SplitAssignment split(const TextRichNetwork& net, const SplitRatios& ratios, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t num_nodes = 300;
  std::size_t num_classes = 4;
  double homophily = 0.8;
  double avg_degree = 6.0;
  std::size_t vocab_per_class = 24;
  double ambiguity = 0.3;
  std::uint64_t seed = 1;
  // Text model: each node text has `words_per_node` words, of which a
  // `signal_fraction` share come from one class vocabulary and the rest
  // from a shared vocabulary of `common_vocab` filler words.
  std::size_t words_per_node = 48;
  double signal_fraction = 0.25;
  std::size_t common_vocab = 40;
  // Label text is the first `label_words` words of the class vocabulary
  // (0: the whole vocabulary).
  std::size_t label_words = 0;
  // Filler words are drawn with probability proportional to 1/rank^s;
  // 0 draws them uniformly.
  double zipf_exponent = 2.0;
};

struct SyntheticVocabulary {
  std::vector<std::vector<std::string>> class_words;
  std::vector<std::string> common_words;
};

// Deterministic pseudo-word vocabularies used by generate_synthetic.
SyntheticVocabulary synthetic_vocabulary(const SyntheticSpec& spec);

// Planted-partition stochastic block model with bag-of-words node texts.
// An `ambiguity` share of nodes draw their class words from a different
// class vocabulary, so their own text points at the wrong label.
TextRichNetwork generate_synthetic(const SyntheticSpec& spec);

}  // namespace ngrpo

#endif  // NGRPO_GRAPH_H_
