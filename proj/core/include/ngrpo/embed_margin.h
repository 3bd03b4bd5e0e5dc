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

#ifndef NGRPO_EMBED_MARGIN_H_
#define NGRPO_EMBED_MARGIN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "ngrpo/graph.h"
#include "ngrpo/matrix.h"

namespace ngrpo {

// Signed feature hashing of whitespace tokens (ASCII-lowercased), then L2
// normalisation. Empty text maps to the basis vector e_0.
std::vector<double> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

// Adds the signed-hash counts of `text` into `out` without normalising.
void hash_accumulate(std::string_view text, std::uint64_t seed, std::span<double> out);

// Frozen text embeddings: one row per node (by node id), one per class.
struct EmbeddingTable {
  std::size_t dim = 0;
  Matrix node_vecs;
  Matrix label_vecs;
};

EmbeddingTable hash_embed_network(const TextRichNetwork& net, std::size_t dim, std::uint64_t seed);

enum class EmbeddingFormat { kText, kBinary };

// Text: header "n d", then n rows of d reals. Binary: 8-byte magic
// "NGRPOEMB", little-endian uint64 n and d, then n*d little-endian float32.
// Rows are node rows in id order followed by class rows.
EmbeddingTable load_embeddings(const std::filesystem::path& path, const TextRichNetwork& net);
void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path,
                     EmbeddingFormat format = EmbeddingFormat::kText);

// l_c = e . e_c for every class c.
std::vector<double> logits(std::span<const double> embedding, const Matrix& label_vecs);
std::vector<double> logits(const EmbeddingTable& table, NodeId node);

// (D^-1/2 (A+I) D^-1/2)^K E by K sparse products.
Matrix sgc_aggregate(const NormalizedAdjacency& adj, const Matrix& embeddings, std::size_t k);

// l_gold - max_{c != gold} l_c. Throws Error when fewer than two classes.
double margin(std::span<const double> logits, ClassId gold);

struct ShapingParams {
  double alpha = 10.0;
  double exponent_cap = 30.0;
};

// exp(min(alpha * |delta|, exponent_cap)).
double reshape_factor(double delta, double alpha, double exponent_cap = 30.0);

struct NodeMargin {
  std::vector<double> raw_logits;
  double raw_margin = 0.0;
  std::vector<double> agg_logits;
  double agg_margin = 0.0;
  double delta = 0.0;
  double reshape = 1.0;
};

struct MarginReport {
  std::size_t k = 1;
  ShapingParams shaping;
  std::vector<NodeMargin> nodes;  // indexed by node id
};

// Margin gain of every node under K-step aggregation of the full graph.
// Throws DataError if any node lacks a gold label.
MarginReport margin_gain(const TextRichNetwork& net, const EmbeddingTable& table, std::size_t k,
                         const ShapingParams& shaping = {});

}  // namespace ngrpo

#endif  // NGRPO_EMBED_MARGIN_H_
