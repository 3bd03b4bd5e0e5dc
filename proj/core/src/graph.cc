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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

#include "json.hpp"
#include "ngrpo/errors.h"
#include "ngrpo/rng.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

TextRichNetwork TextRichNetwork::create(Input input) {
  const std::size_t n = input.texts.size();
  if (n == 0) throw DataError("network has no nodes");
  if (input.labels.size() < 2) {
    throw DataError("network needs at least 2 classes, got " + std::to_string(input.labels.size()));
  }

  std::sort(input.labels.begin(), input.labels.end(),
            [](const LabelInfo& a, const LabelInfo& b) { return a.id < b.id; });
  std::set<std::string> tokens;
  for (std::size_t c = 0; c < input.labels.size(); ++c) {
    if (input.labels[c].id != static_cast<ClassId>(c)) {
      throw DataError("class ids must be contiguous from 0; missing id " + std::to_string(c));
    }
    if (!tokens.insert(input.labels[c].token).second) {
      throw DataError("duplicate identifier token '" + input.labels[c].token + "'");
    }
  }

  if (input.gold.empty()) input.gold.assign(n, std::nullopt);
  if (input.gold.size() != n) throw DataError("gold label vector size does not match node count");
  const auto num_classes = static_cast<ClassId>(input.labels.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (input.gold[i] && (*input.gold[i] < 0 || *input.gold[i] >= num_classes)) {
      throw DataError("node " + std::to_string(i) + " has gold label " +
                      std::to_string(*input.gold[i]) + " outside 0.." +
                      std::to_string(num_classes - 1));
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(input.edges.size());
  for (auto [u, v] : input.edges) {
    if (u >= n || v >= n) {
      throw DataError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                      ") references a node that does not exist");
    }
    if (u == v) throw DataError("self-loop edge on node " + std::to_string(u));
    edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  TextRichNetwork net;
  net.texts_ = std::move(input.texts);
  net.edges_ = std::move(edges);
  net.labels_ = std::move(input.labels);
  net.gold_ = std::move(input.gold);
  net.meta_ = std::move(input.meta);

  std::vector<std::size_t> degree(n, 0);
  for (auto [u, v] : net.edges_) {
    ++degree[u];
    ++degree[v];
  }
  net.adj_offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) net.adj_offsets_[i + 1] = net.adj_offsets_[i] + degree[i];
  net.adj_.resize(net.adj_offsets_[n]);
  std::vector<std::size_t> fill(net.adj_offsets_.begin(), net.adj_offsets_.end() - 1);
  for (auto [u, v] : net.edges_) {
    net.adj_[fill[u]++] = v;
    net.adj_[fill[v]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(net.adj_.begin() + net.adj_offsets_[i], net.adj_.begin() + net.adj_offsets_[i + 1]);
  }
  return net;
}

std::span<const NodeId> TextRichNetwork::neighbours(NodeId node) const {
  if (node >= num_nodes()) throw DataError("node " + std::to_string(node) + " does not exist");
  return {adj_.data() + adj_offsets_[node], adj_offsets_[node + 1] - adj_offsets_[node]};
}

bool TextRichNetwork::has_edge(NodeId u, NodeId v) const {
  auto nb = neighbours(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

double TextRichNetwork::edge_homophily() const {
  std::size_t labelled = 0;
  std::size_t same = 0;
  for (auto [u, v] : edges_) {
    if (!gold_[u] || !gold_[v]) continue;
    ++labelled;
    if (*gold_[u] == *gold_[v]) ++same;
  }
  return labelled == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(labelled);
}

// ---------------------------------------------------------------------------
// JSONL

namespace {

using json = nlohmann::json;

[[noreturn]] void line_error(std::size_t line, const std::string& msg) {
  throw DataError("line " + std::to_string(line) + ": " + msg);
}

template <typename T>
T required(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) line_error(line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    line_error(line, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

TextRichNetwork parse_jsonl(std::string_view content) {
  std::optional<NetworkMeta> meta;
  std::vector<LabelInfo> labels;
  std::map<long long, std::size_t> node_line;
  std::map<long long, std::string> texts;
  std::map<long long, std::optional<ClassId>> gold;
  std::vector<std::tuple<long long, long long, std::size_t>> raw_edges;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = trim(content.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty()) continue;

    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      line_error(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!rec.is_object()) line_error(line_no, "record is not a JSON object");
    const auto kind = required<std::string>(rec, "kind", line_no);
    if (kind == "meta") {
      if (meta) line_error(line_no, "duplicate meta record");
      meta = NetworkMeta{required<std::string>(rec, "node_type", line_no),
                         required<std::string>(rec, "relation", line_no)};
      auto it = rec.find("labels");
      if (it == rec.end() || !it->is_array()) line_error(line_no, "meta record has no labels array");
      for (const auto& lab : *it) {
        if (!lab.is_object()) line_error(line_no, "label entry is not an object");
        labels.push_back(LabelInfo{required<int>(lab, "id", line_no),
                                   required<std::string>(lab, "text", line_no),
                                   required<std::string>(lab, "token", line_no)});
      }
    } else if (kind == "node") {
      const auto id = required<long long>(rec, "id", line_no);
      if (id < 0) line_error(line_no, "negative node id");
      if (!node_line.emplace(id, line_no).second) {
        line_error(line_no, "duplicate node id " + std::to_string(id));
      }
      texts[id] = required<std::string>(rec, "text", line_no);
      auto g = rec.find("gold");
      if (g != rec.end() && !g->is_null()) {
        if (!g->is_number_integer()) line_error(line_no, "field 'gold' has the wrong type");
        gold[id] = g->get<int>();
      } else {
        gold[id] = std::nullopt;
      }
      auto e = rec.find("edges");
      if (e != rec.end()) {
        if (!e->is_array()) line_error(line_no, "field 'edges' is not an array");
        for (const auto& other : *e) {
          if (!other.is_number_integer()) line_error(line_no, "edge endpoint is not an integer");
          raw_edges.emplace_back(id, other.get<long long>(), line_no);
        }
      }
    } else {
      line_error(line_no, "unknown record kind '" + kind + "'");
    }
  }

  if (!meta) throw DataError("dataset has no meta record with a label block");
  if (texts.empty()) throw DataError("dataset has no node records");

  TextRichNetwork::Input input;
  const auto n = static_cast<long long>(texts.size());
  for (long long i = 0; i < n; ++i) {
    auto it = texts.find(i);
    if (it == texts.end()) {
      throw DataError("node ids must be contiguous 0.." + std::to_string(n - 1) + "; missing id " +
                      std::to_string(i));
    }
    input.texts.push_back(std::move(it->second));
    input.gold.push_back(gold[i]);
  }
  for (auto [u, v, line] : raw_edges) {
    if (v < 0 || v >= n) {
      line_error(line, "edge (" + std::to_string(u) + "," + std::to_string(v) +
                           ") has a dangling endpoint " + std::to_string(v));
    }
    if (u != v) input.edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
  }
  input.labels = std::move(labels);
  input.meta = std::move(*meta);
  return TextRichNetwork::create(std::move(input));
}

TextRichNetwork load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_jsonl(buf.str());
}

std::string to_jsonl(const TextRichNetwork& net) {
  using ojson = nlohmann::ordered_json;
  std::string out;
  ojson meta;
  meta["kind"] = "meta";
  meta["node_type"] = net.meta().node_type;
  meta["relation"] = net.meta().relation;
  meta["labels"] = ojson::array();
  for (const auto& lab : net.labels()) {
    ojson l;
    l["id"] = lab.id;
    l["text"] = lab.text;
    l["token"] = lab.token;
    meta["labels"].push_back(std::move(l));
  }
  out += meta.dump();
  out += '\n';
  for (NodeId i = 0; i < net.num_nodes(); ++i) {
    ojson rec;
    rec["kind"] = "node";
    rec["id"] = i;
    rec["text"] = net.text(i);
    if (auto g = net.gold(i)) {
      rec["gold"] = *g;
    } else {
      rec["gold"] = nullptr;
    }
    rec["edges"] = ojson::array();
    for (NodeId v : net.neighbours(i)) rec["edges"].push_back(v);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_jsonl(const TextRichNetwork& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset " + path.string());
  out << to_jsonl(net);
  if (!out) throw DataError("failed writing dataset " + path.string());
}

// ---------------------------------------------------------------------------
// Normalised adjacency

NormalizedAdjacency::NormalizedAdjacency(const TextRichNetwork& net) {
  const std::size_t n = net.num_nodes();
  std::vector<double> inv_sqrt_deg(n);
  for (NodeId u = 0; u < n; ++u) {
    inv_sqrt_deg[u] = 1.0 / std::sqrt(static_cast<double>(net.degree(u) + 1));
  }
  row_offsets_.assign(n + 1, 0);
  for (NodeId u = 0; u < n; ++u) {
    auto nb = net.neighbours(u);
    bool self_done = false;
    auto emit = [&](NodeId v) {
      columns_.push_back(v);
      values_.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[v]);
    };
    for (NodeId v : nb) {
      if (!self_done && u < v) {
        emit(u);
        self_done = true;
      }
      emit(v);
    }
    if (!self_done) emit(u);
    row_offsets_[u + 1] = columns_.size();
  }
}

double NormalizedAdjacency::at(std::size_t u, std::size_t v) const {
  auto begin = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[u]);
  auto end = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[u + 1]);
  auto it = std::lower_bound(begin, end, v);
  if (it == end || *it != v) return 0.0;
  return values_[static_cast<std::size_t>(it - columns_.begin())];
}

Matrix NormalizedAdjacency::multiply(const Matrix& input) const {
  if (input.rows() != size()) {
    throw DataError("adjacency of size " + std::to_string(size()) + " cannot multiply a matrix with " +
                    std::to_string(input.rows()) + " rows");
  }
  Matrix out(input.rows(), input.cols());
  for (std::size_t u = 0; u < size(); ++u) {
    auto dst = out.row(u);
    for (std::size_t k = row_offsets_[u]; k < row_offsets_[u + 1]; ++k) {
      const double w = values_[k];
      auto src = input.row(columns_[k]);
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

namespace {

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.below(i)]);
  }
}

}  // namespace

SplitAssignment split(const TextRichNetwork& net, const SplitRatios& ratios, std::uint64_t seed) {
  if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0)) {
    throw ConfigError("split ratios must all be positive");
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  const std::size_t n = net.num_nodes();
  if (n < 3) throw DataError("cannot split a network with fewer than 3 nodes");

  // Strata: one per class, plus one for unlabelled nodes.
  const std::size_t num_strata = net.num_classes() + 1;
  std::vector<std::vector<NodeId>> strata(num_strata);
  for (NodeId i = 0; i < n; ++i) {
    auto g = net.gold(i);
    strata[g ? static_cast<std::size_t>(*g) : num_strata - 1].push_back(i);
  }
  Rng rng(derive_seed(seed, {0x5b11u}));
  for (auto& s : strata) shuffle(s, rng);

  // Proportional interleave: element j of a stratum of size m sits at
  // position (j + 0.5) / m, so every contiguous window mirrors the strata.
  struct Keyed {
    double key;
    std::size_t stratum;
    NodeId node;
  };
  std::vector<Keyed> order;
  order.reserve(n);
  for (std::size_t s = 0; s < num_strata; ++s) {
    const double m = static_cast<double>(strata[s].size());
    for (std::size_t j = 0; j < strata[s].size(); ++j) {
      order.push_back({(static_cast<double>(j) + 0.5) / m, s, strata[s][j]});
    }
  }
  std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
    return a.key != b.key ? a.key < b.key : a.stratum < b.stratum;
  });

  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.train));
  const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * ratios.val));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw DataError("split ratios leave an empty part for " + std::to_string(n) + " nodes");
  }
  SplitAssignment out;
  for (std::size_t k = 0; k < n; ++k) {
    auto& part = k < n_train ? out.train : (k < n_train + n_val ? out.val : out.test);
    part.push_back(order[k].node);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                        "p", "r", "s", "t", "v", "z", "ch", "sh"};
constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

std::string pseudo_word(Rng& rng) {
  std::string w;
  const std::size_t syllables = 2 + rng.below(2);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
  }
  return w;
}

void validate(const SyntheticSpec& spec) {
  auto fail = [](const std::string& msg) { throw ConfigError("synthetic generator: " + msg); };
  if (spec.num_classes < 2) fail("num_classes must be >= 2");
  if (spec.num_nodes < spec.num_classes) fail("num_nodes must be >= num_classes");
  if (!(spec.homophily >= 0.0 && spec.homophily <= 1.0)) fail("homophily must lie in [0,1]");
  if (!(spec.ambiguity >= 0.0 && spec.ambiguity <= 1.0)) fail("ambiguity must lie in [0,1]");
  if (!(spec.avg_degree > 0.0) || !std::isfinite(spec.avg_degree)) fail("avg_degree must be positive");
  if (spec.vocab_per_class == 0) fail("vocab_per_class must be >= 1");
  if (spec.words_per_node == 0) fail("words_per_node must be >= 1");
  if (!(spec.signal_fraction >= 0.0 && spec.signal_fraction <= 1.0)) {
    fail("signal_fraction must lie in [0,1]");
  }
  if (spec.common_vocab == 0 && spec.signal_fraction < 1.0) fail("common_vocab must be >= 1");
  if (!(spec.zipf_exponent >= 0.0) || !std::isfinite(spec.zipf_exponent)) {
    fail("zipf_exponent must be finite and >= 0");
  }
}

}  // namespace

SyntheticVocabulary synthetic_vocabulary(const SyntheticSpec& spec) {
  validate(spec);
  Rng rng(derive_seed(spec.seed, {0x70cab}));
  std::set<std::string> used;
  auto fresh = [&] {
    for (;;) {
      std::string w = pseudo_word(rng);
      if (used.insert(w).second) return w;
    }
  };
  SyntheticVocabulary vocab;
  vocab.class_words.resize(spec.num_classes);
  for (auto& words : vocab.class_words) {
    for (std::size_t j = 0; j < spec.vocab_per_class; ++j) words.push_back(fresh());
  }
  for (std::size_t j = 0; j < spec.common_vocab; ++j) vocab.common_words.push_back(fresh());
  return vocab;
}

TextRichNetwork generate_synthetic(const SyntheticSpec& spec) {
  const SyntheticVocabulary vocab = synthetic_vocabulary(spec);
  const std::size_t n = spec.num_nodes;
  const std::size_t c_count = spec.num_classes;

  Rng class_rng(derive_seed(spec.seed, {1}));
  std::vector<ClassId> cls(n);
  for (std::size_t i = 0; i < n; ++i) cls[i] = static_cast<ClassId>(i % c_count);
  shuffle(cls, class_rng);

  // Ambiguous nodes borrow the vocabulary of a different class.
  Rng amb_rng(derive_seed(spec.seed, {2}));
  std::vector<NodeId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  shuffle(order, amb_rng);
  const auto n_amb = static_cast<std::size_t>(std::llround(spec.ambiguity * static_cast<double>(n)));
  std::vector<ClassId> text_class(cls);
  for (std::size_t k = 0; k < n_amb; ++k) {
    const NodeId i = order[k];
    const auto offset = static_cast<ClassId>(1 + amb_rng.below(c_count - 1));
    text_class[i] = (cls[i] + offset) % static_cast<ClassId>(c_count);
  }

  Rng text_rng(derive_seed(spec.seed, {3}));
  const auto n_signal = static_cast<std::size_t>(
      std::llround(spec.signal_fraction * static_cast<double>(spec.words_per_node)));
  std::vector<double> filler_cdf(vocab.common_words.size());
  for (std::size_t r = 0; r < filler_cdf.size(); ++r) {
    filler_cdf[r] = (r ? filler_cdf[r - 1] : 0.0) +
                    std::pow(static_cast<double>(r + 1), -spec.zipf_exponent);
  }
  auto draw_filler = [&]() -> std::string_view {
    const double u = text_rng.uniform() * filler_cdf.back();
    const auto it = std::upper_bound(filler_cdf.begin(), filler_cdf.end(), u);
    const auto r = std::min<std::size_t>(static_cast<std::size_t>(it - filler_cdf.begin()),
                                         filler_cdf.size() - 1);
    return vocab.common_words[r];
  };
  std::vector<std::string> texts(n);
  for (NodeId i = 0; i < n; ++i) {
    const auto& own = vocab.class_words[static_cast<std::size_t>(text_class[i])];
    std::vector<std::string_view> words;
    for (std::size_t k = 0; k < spec.words_per_node; ++k) {
      if (k < n_signal) {
        words.push_back(own[text_rng.below(own.size())]);
      } else {
        words.push_back(draw_filler());
      }
    }
    shuffle(words, text_rng);
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k) texts[i] += ' ';
      texts[i] += words[k];
    }
  }

  // Bernoulli edge per pair with block probabilities chosen so the expected
  // edge count is n * avg_degree / 2 and the expected intra-class share is
  // the requested homophily.
  std::vector<double> class_size(c_count, 0.0);
  for (ClassId c : cls) class_size[static_cast<std::size_t>(c)] += 1.0;
  double intra_pairs = 0.0;
  for (double s : class_size) intra_pairs += s * (s - 1.0) / 2.0;
  const double all_pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double inter_pairs = all_pairs - intra_pairs;
  const double target_edges = static_cast<double>(n) * spec.avg_degree / 2.0;
  const double p_in =
      intra_pairs > 0 ? std::min(1.0, spec.homophily * target_edges / intra_pairs) : 0.0;
  const double p_out =
      inter_pairs > 0 ? std::min(1.0, (1.0 - spec.homophily) * target_edges / inter_pairs) : 0.0;

  Rng edge_rng(derive_seed(spec.seed, {4}));
  TextRichNetwork::Input input;
  for (NodeId u = 0; u < n; ++u) {
    for (NodeId v = u + 1; v < n; ++v) {
      const double p = cls[u] == cls[v] ? p_in : p_out;
      if (edge_rng.bernoulli(p)) input.edges.emplace_back(u, v);
    }
  }

  for (std::size_t c = 0; c < c_count; ++c) {
    std::string text;
    const std::size_t n_label = spec.label_words == 0
                                    ? vocab.class_words[c].size()
                                    : std::min(spec.label_words, vocab.class_words[c].size());
    for (std::size_t j = 0; j < n_label; ++j) {
      if (j) text += ' ';
      text += vocab.class_words[c][j];
    }
    input.labels.push_back(LabelInfo{static_cast<ClassId>(c), std::move(text), std::to_string(c)});
  }
  input.texts = std::move(texts);
  input.gold.assign(cls.begin(), cls.end());
  input.meta = NetworkMeta{"a synthetic document", "topical co-occurrence"};
  return TextRichNetwork::create(std::move(input));
}

}  // namespace ngrpo
