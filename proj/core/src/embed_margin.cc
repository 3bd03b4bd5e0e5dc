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

#include "ngrpo/embed_margin.h"

#include <bit>
#include <cmath>
#include <algorithm>
#include <cstring>
#include <limits>
#include <fstream>
#include <sstream>

#include "ngrpo/errors.h"
#include "ngrpo/rng.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

namespace {

std::uint64_t fnv1a(std::string_view word, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ mix64(seed);
  for (char ch : word) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

}  // namespace

void hash_accumulate(std::string_view text, std::uint64_t seed, std::span<double> out) {
  if (out.empty()) return;
  for (std::string_view word : split_whitespace(text)) {
    const std::uint64_t h = fnv1a(word, seed);
    const std::size_t bucket = (h >> 1) % out.size();
    out[bucket] += (h & 1U) ? 1.0 : -1.0;
  }
}

std::vector<double> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("embedding dimension must be >= 2");
  std::vector<double> v(dim, 0.0);
  hash_accumulate(text, seed, v);
  const double norm = l2_norm(v);
  // Signed collisions can cancel a non-empty bag to zero; treat that like
  // empty text.
  if (norm == 0.0) {
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    return v;
  }
  for (double& x : v) x /= norm;
  return v;
}

EmbeddingTable hash_embed_network(const TextRichNetwork& net, std::size_t dim, std::uint64_t seed) {
  EmbeddingTable table;
  table.dim = dim;
  table.node_vecs = Matrix(net.num_nodes(), dim);
  table.label_vecs = Matrix(net.num_classes(), dim);
  for (NodeId i = 0; i < net.num_nodes(); ++i) {
    auto v = hash_embed(net.text(i), dim, seed);
    std::copy(v.begin(), v.end(), table.node_vecs.row(i).begin());
  }
  for (std::size_t c = 0; c < net.num_classes(); ++c) {
    auto v = hash_embed(net.labels()[c].text, dim, seed);
    std::copy(v.begin(), v.end(), table.label_vecs.row(c).begin());
  }
  return table;
}

// ---------------------------------------------------------------------------
// Embedding files

namespace {

constexpr char kBinaryMagic[8] = {'N', 'G', 'R', 'P', 'O', 'E', 'M', 'B'};

template <typename T>
T read_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!in) throw DataError("embedding file truncated");
  std::make_unsigned_t<std::conditional_t<std::is_floating_point_v<T>, std::uint32_t, T>> raw = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    raw |= static_cast<decltype(raw)>(bytes[i]) << (8 * i);
  }
  if constexpr (std::is_floating_point_v<T>) {
    return std::bit_cast<T>(raw);
  } else {
    return static_cast<T>(raw);
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<std::is_floating_point_v<T>, std::uint32_t, T>;
  const auto raw = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.put(static_cast<char>((raw >> (8 * i)) & 0xFF));
  }
}

Matrix read_rows(std::istream& in, bool binary, std::size_t& dim_out) {
  std::size_t n = 0;
  std::size_t d = 0;
  if (binary) {
    n = read_le<std::uint64_t>(in);
    d = read_le<std::uint64_t>(in);
  } else {
    std::string header;
    std::getline(in, header);
    auto parts = split_whitespace(header);
    if (parts.size() != 2) throw DataError("embedding header must be 'n d'");
    n = static_cast<std::size_t>(parse_uint(parts[0], "embedding row count"));
    d = static_cast<std::size_t>(parse_uint(parts[1], "embedding dimension"));
  }
  if (d == 0) throw DataError("embedding dimension must be positive");
  Matrix m(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    if (binary) {
      for (std::size_t c = 0; c < d; ++c) m(r, c) = read_le<float>(in);
    } else {
      std::string line;
      if (!std::getline(in, line)) {
        throw DataError("embedding file has " + std::to_string(r) + " rows, header declares " +
                        std::to_string(n));
      }
      auto parts = split_whitespace(line);
      if (parts.size() != d) {
        throw DataError("embedding row " + std::to_string(r) + " has " + std::to_string(parts.size()) +
                        " values, expected dimension " + std::to_string(d));
      }
      for (std::size_t c = 0; c < d; ++c) m(r, c) = parse_double(parts[c], "embedding value");
    }
    for (std::size_t c = 0; c < d; ++c) {
      if (!std::isfinite(m(r, c))) {
        throw DataError("embedding row " + std::to_string(r) + " has a non-finite value");
      }
    }
  }
  if (!binary) {
    std::string extra;
    while (std::getline(in, extra)) {
      if (!trim(extra).empty()) throw DataError("embedding file has more rows than its header declares");
    }
  }
  dim_out = d;
  return m;
}

}  // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path, const TextRichNetwork& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  char magic[8] = {};
  in.read(magic, 8);
  const bool binary = in.gcount() == 8 && std::memcmp(magic, kBinaryMagic, 8) == 0;
  if (!binary) {
    in.clear();
    in.seekg(0);
  }
  std::size_t dim = 0;
  Matrix rows = read_rows(in, binary, dim);
  const std::size_t expected = net.num_nodes() + net.num_classes();
  if (rows.rows() != expected) {
    throw DataError("embedding file has " + std::to_string(rows.rows()) + " rows, network needs " +
                    std::to_string(expected) + " (nodes + classes)");
  }
  EmbeddingTable table;
  table.dim = dim;
  table.node_vecs = Matrix(net.num_nodes(), dim);
  table.label_vecs = Matrix(net.num_classes(), dim);
  for (std::size_t r = 0; r < net.num_nodes(); ++r) {
    std::copy_n(rows.row(r).begin(), dim, table.node_vecs.row(r).begin());
  }
  for (std::size_t c = 0; c < net.num_classes(); ++c) {
    std::copy_n(rows.row(net.num_nodes() + c).begin(), dim, table.label_vecs.row(c).begin());
  }
  return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path,
                     EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file " + path.string());
  const std::size_t n = table.node_vecs.rows() + table.label_vecs.rows();
  auto each_row = [&](auto&& fn) {
    for (std::size_t r = 0; r < table.node_vecs.rows(); ++r) fn(table.node_vecs.row(r));
    for (std::size_t r = 0; r < table.label_vecs.rows(); ++r) fn(table.label_vecs.row(r));
  };
  if (format == EmbeddingFormat::kBinary) {
    out.write(kBinaryMagic, 8);
    write_le<std::uint64_t>(out, n);
    write_le<std::uint64_t>(out, table.dim);
    each_row([&](std::span<const double> row) {
      for (double x : row) write_le<float>(out, static_cast<float>(x));
    });
  } else {
    out << n << ' ' << table.dim << '\n';
    each_row([&](std::span<const double> row) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out << ' ';
        out << format_double(row[c]);
      }
      out << '\n';
    });
  }
  if (!out) throw DataError("failed writing embedding file " + path.string());
}

// ---------------------------------------------------------------------------
// Logits and margins

std::vector<double> logits(std::span<const double> embedding, const Matrix& label_vecs) {
  std::vector<double> out(label_vecs.rows());
  for (std::size_t c = 0; c < label_vecs.rows(); ++c) out[c] = dot(embedding, label_vecs.row(c));
  return out;
}

std::vector<double> logits(const EmbeddingTable& table, NodeId node) {
  if (node >= table.node_vecs.rows()) throw DataError("node " + std::to_string(node) + " not in table");
  return logits(table.node_vecs.row(node), table.label_vecs);
}

Matrix sgc_aggregate(const NormalizedAdjacency& adj, const Matrix& embeddings, std::size_t k) {
  Matrix out = embeddings;
  for (std::size_t step = 0; step < k; ++step) out = adj.multiply(out);
  return out;
}

double margin(std::span<const double> logits, ClassId gold) {
  if (logits.size() < 2) throw Error("margin needs at least two classes");
  if (gold < 0 || static_cast<std::size_t>(gold) >= logits.size()) {
    throw Error("gold class " + std::to_string(gold) + " out of range");
  }
  double runner_up = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (static_cast<ClassId>(c) != gold) runner_up = std::max(runner_up, logits[c]);
  }
  return logits[static_cast<std::size_t>(gold)] - runner_up;
}

double reshape_factor(double delta, double alpha, double exponent_cap) {
  if (!(alpha > 0.0)) throw ConfigError("shaping.alpha must be positive");
  return std::exp(std::min(alpha * std::abs(delta), exponent_cap));
}

MarginReport margin_gain(const TextRichNetwork& net, const EmbeddingTable& table, std::size_t k,
                         const ShapingParams& shaping) {
  if (table.node_vecs.rows() != net.num_nodes() || table.label_vecs.rows() != net.num_classes()) {
    throw DataError("embedding table is not aligned with the network");
  }
  const Matrix aggregated = sgc_aggregate(NormalizedAdjacency(net), table.node_vecs, k);
  MarginReport report;
  report.k = k;
  report.shaping = shaping;
  report.nodes.resize(net.num_nodes());
  for (NodeId i = 0; i < net.num_nodes(); ++i) {
    auto gold = net.gold(i);
    if (!gold) throw DataError("margin gain needs a gold label for node " + std::to_string(i));
    NodeMargin& m = report.nodes[i];
    m.raw_logits = logits(table.node_vecs.row(i), table.label_vecs);
    m.agg_logits = logits(aggregated.row(i), table.label_vecs);
    m.raw_margin = margin(m.raw_logits, *gold);
    m.agg_margin = margin(m.agg_logits, *gold);
    m.delta = m.agg_margin - m.raw_margin;
    m.reshape = reshape_factor(m.delta, shaping.alpha, shaping.exponent_cap);
  }
  return report;
}

}  // namespace ngrpo
