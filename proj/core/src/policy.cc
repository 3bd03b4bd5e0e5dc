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

#include "ngrpo/policy.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ngrpo/embed_margin.h"
#include "ngrpo/errors.h"
#include "ngrpo/rng.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

namespace {

constexpr std::string_view kStructuralText[] = {"<think>", "</think>", "<answer>", "</answer>",
                                                "<end>"};
constexpr std::string_view kNeighbourWord = "neighbour";

bool looks_numeric(std::string_view w) {
  std::size_t i = w.starts_with('-') ? 1 : 0;
  if (i == w.size()) return false;
  for (; i < w.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(w[i]))) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::create(const std::vector<std::string>& reason_words, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("vocabulary needs at least 2 identifier tokens");
  Vocabulary vocab;
  for (auto s : kStructuralText) vocab.words_.emplace_back(s);
  std::set<std::string> seen(vocab.words_.begin(), vocab.words_.end());
  bool has_neighbour = false;
  for (const auto& w : reason_words) {
    if (w.empty()) throw ConfigError("reason word must not be empty");
    for (char ch : w) {
      if (std::isspace(static_cast<unsigned char>(ch)) || ch == '<' || ch == '>') {
        throw ConfigError("reason word '" + w + "' contains whitespace or angle brackets");
      }
    }
    if (looks_numeric(w)) throw ConfigError("reason word '" + w + "' looks like a class id");
    if (!seen.insert(w).second) throw ConfigError("duplicate reason word '" + w + "'");
    if (w == kNeighbourWord) {
      has_neighbour = true;
      vocab.neighbour_ = static_cast<TokenId>(vocab.words_.size());
    }
    vocab.words_.push_back(w);
  }
  if (!has_neighbour) throw ConfigError("reason words must include \"neighbour\"");
  vocab.num_reason_ = reason_words.size();
  for (std::size_t c = 0; c < num_classes; ++c) vocab.words_.push_back(std::to_string(c));
  return vocab;
}

std::optional<TokenId> Vocabulary::find(std::string_view word) const {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i] == word) return static_cast<TokenId>(i);
  }
  return std::nullopt;
}

std::string Vocabulary::detokenise(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (t == kEnd) break;
    if (!out.empty()) out += ' ';
    out += text(t);
  }
  return out;
}

std::vector<TokenId> Vocabulary::tokenise(std::string_view text) const {
  std::vector<TokenId> out;
  for (std::string_view piece : split_whitespace(text)) {
    auto t = find(piece);
    if (!t) throw DataError("word '" + std::string(piece) + "' is not in the policy vocabulary");
    out.push_back(*t);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Schema state machine

DecodeState advance(const Vocabulary& vocab, DecodeState state, TokenId token) {
  using S = SchemaState;
  switch (state.schema) {
    case S::kStart:
      state.schema = token == Vocabulary::kThinkOpen ? S::kThink : S::kOff;
      break;
    case S::kThink:
      if (token == Vocabulary::kThinkClose) {
        state.schema = S::kAfterThink;
      } else if (token == vocab.neighbour_token()) {
        state.neighbour_seen = true;
      }
      break;
    case S::kAfterThink:
      state.schema = token == Vocabulary::kAnswerOpen ? S::kAnswer : S::kOff;
      break;
    case S::kAnswer:
      state.schema = vocab.is_identifier(token) ? S::kAfterId : S::kOff;
      break;
    case S::kAfterId:
      state.schema = token == Vocabulary::kAnswerClose ? S::kAfterAnswer : S::kOff;
      break;
    case S::kAfterAnswer:
    case S::kOff:
      state.schema = S::kOff;
      break;
  }
  return state;
}

DecodeState replay(const Vocabulary& vocab, std::span<const TokenId> prefix) {
  DecodeState s;
  for (TokenId t : prefix) s = advance(vocab, s, t);
  return s;
}

// ---------------------------------------------------------------------------
// Features

namespace {

// Hashes each distinct (lower-cased) word of `text` once.
void add_presence(std::string_view text, std::uint64_t seed, std::span<double> out) {
  std::set<std::string> unique;
  for (std::string_view w : split_whitespace(text)) {
    std::string lower(w);
    for (char& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    unique.insert(std::move(lower));
  }
  std::string joined;
  for (const auto& w : unique) {
    joined += w;
    joined += ' ';
  }
  hash_accumulate(joined, seed, out);
}

}  // namespace

FeatureLayout FeatureLayout::for_dim(std::size_t m) {
  if (m < 3) throw ConfigError("policy feature dimension must be >= 3");
  FeatureLayout layout;
  layout.dim = m;
  layout.target_end = m / 3;
  layout.neighbour_end = 2 * (m / 3);
  return layout;
}

std::vector<double> features(const PromptContext& ctx, std::size_t m, std::uint64_t seed) {
  const FeatureLayout layout = FeatureLayout::for_dim(m);
  std::vector<double> phi(m, 0.0);
  std::span<double> all(phi);
  std::span<double> target = all.subspan(0, layout.target_end);
  std::span<double> neighbours =
      all.subspan(layout.target_end, layout.neighbour_end - layout.target_end);
  std::span<double> labels = all.subspan(layout.neighbour_end);

  add_presence(ctx.target_text, derive_seed(seed, {1}), target);
  add_presence(ctx.pair_text, derive_seed(seed, {1}), target);
  for (const auto& t : ctx.neighbour_texts) add_presence(t, derive_seed(seed, {2}), neighbours);
  for (const auto& t : ctx.pair_neighbour_texts) add_presence(t, derive_seed(seed, {2}), neighbours);
  add_presence(ctx.label_block, derive_seed(seed, {3}), labels);

  std::size_t non_empty = 0;
  for (std::span<double> block : {target, neighbours, labels}) {
    const double norm = l2_norm(block);
    if (norm == 0.0) continue;
    ++non_empty;
    for (double& x : block) x /= norm;
  }
  if (non_empty == 0) {
    phi[0] = 1.0;
    return phi;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(non_empty));
  for (double& x : phi) x *= scale;
  return phi;
}

// ---------------------------------------------------------------------------
// Policy

Policy::Policy(Vocabulary vocab, PolicyConfig config)
    : vocab_(std::move(vocab)),
      config_(std::move(config)),
      layout_(FeatureLayout::for_dim(config_.feature_dim)) {
  if (!std::isfinite(config_.schema_prior)) throw ConfigError("policy.schema_prior must be finite");
  const std::size_t v_count = vocab_.size();
  prior_.assign(kNumSchemaStates * v_count, 0.0);
  auto boost = [&](SchemaState s, TokenId t) {
    prior_[static_cast<std::size_t>(s) * v_count + t] = config_.schema_prior;
  };
  boost(SchemaState::kStart, Vocabulary::kThinkOpen);
  for (std::size_t r = 0; r < vocab_.num_reason(); ++r) boost(SchemaState::kThink, vocab_.reason(r));
  boost(SchemaState::kThink, Vocabulary::kThinkClose);
  boost(SchemaState::kAfterThink, Vocabulary::kAnswerOpen);
  for (std::size_t c = 0; c < vocab_.num_classes(); ++c) {
    boost(SchemaState::kAnswer, vocab_.identifier(static_cast<ClassId>(c)));
  }
  boost(SchemaState::kAfterId, Vocabulary::kAnswerClose);
  boost(SchemaState::kAfterAnswer, Vocabulary::kEnd);
  boost(SchemaState::kOff, Vocabulary::kEnd);
}

Policy Policy::for_classes(std::size_t num_classes, PolicyConfig config) {
  Vocabulary vocab = Vocabulary::create(config.reason_words, num_classes);
  return Policy(std::move(vocab), std::move(config));
}

double Policy::prior(SchemaState state, TokenId token) const {
  return prior_[static_cast<std::size_t>(state) * vocab_.size() + token];
}

// ---------------------------------------------------------------------------
// Parameters

PolicyParams::PolicyParams(std::size_t feature_dim, std::size_t vocab_size)
    : feature_dim_(feature_dim),
      vocab_size_(vocab_size),
      values_((feature_dim + 1 + kNumSchemaStates) * vocab_size, 0.0) {}

bool PolicyParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

// ---------------------------------------------------------------------------
// Distributions

namespace {

void check_shape(const Policy& policy, const PolicyParams& params) {
  if (params.vocab_size() != policy.vocab().size() ||
      params.feature_dim() != policy.config().feature_dim) {
    throw DataError("policy parameters do not match the vocabulary or feature dimension");
  }
}

// Calls fn(k) for every feature index visible in `state`.
template <typename Fn>
void for_visible_features(const FeatureLayout& layout, std::span<const double> features,
                          DecodeState state, Fn&& fn) {
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (!state.neighbour_seen && k >= layout.target_end && k < layout.neighbour_end) {
      k = layout.neighbour_end - 1;
      continue;
    }
    if (features[k] != 0.0) fn(k);
  }
}

}  // namespace

void next_token_logits(const Policy& policy, const PolicyParams& params,
                       std::span<const double> features, DecodeState state, std::span<double> out) {
  const std::size_t v_count = policy.vocab().size();
  for (TokenId v = 0; v < v_count; ++v) {
    out[v] = params.bias(v) + params.state_offset(state.schema, v) + policy.prior(state.schema, v);
  }
  for_visible_features(policy.layout(), features, state, [&](std::size_t k) {
    const double phi = features[k];
    for (TokenId v = 0; v < v_count; ++v) out[v] += phi * params.weight(k, v);
  });
}

void log_softmax(std::span<double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  const double lse = mx + std::log(sum);
  for (double& z : logits) z -= lse;
}

std::vector<double> next_token_dist(const Policy& policy, const PolicyParams& params,
                                    std::span<const double> features, DecodeState state) {
  check_shape(policy, params);
  std::vector<double> p(policy.vocab().size());
  next_token_logits(policy, params, features, state, p);
  log_softmax(p);
  for (double& x : p) x = std::exp(x);
  return p;
}

Rollout rollout(const Policy& policy, const PolicyParams& params, std::span<const double> features,
                std::uint64_t seed, std::size_t max_len) {
  check_shape(policy, params);
  if (max_len < 5) throw ConfigError("rollout max_len must be >= 5");
  const Vocabulary& vocab = policy.vocab();
  Rng rng(seed);
  Rollout out;
  DecodeState state;
  std::vector<double> lp(vocab.size());
  while (out.tokens.size() < max_len) {
    next_token_logits(policy, params, features, state, lp);
    log_softmax(lp);
    const double u = rng.uniform();
    double cum = 0.0;
    TokenId pick = static_cast<TokenId>(vocab.size() - 1);
    for (TokenId v = 0; v < vocab.size(); ++v) {
      cum += std::exp(lp[v]);
      if (u < cum) {
        pick = v;
        break;
      }
    }
    out.tokens.push_back(pick);
    out.logprobs_old.push_back(lp[pick]);
    if (pick == Vocabulary::kEnd) break;
    state = advance(vocab, state, pick);
  }
  out.text = vocab.detokenise(out.tokens);
  out.parsed = parse_response(out.text);
  return out;
}

std::vector<double> token_logprobs(const Policy& policy, const PolicyParams& params,
                                   std::span<const double> features, std::span<const TokenId> tokens) {
  check_shape(policy, params);
  const Vocabulary& vocab = policy.vocab();
  std::vector<double> out;
  out.reserve(tokens.size());
  std::vector<double> lp(vocab.size());
  DecodeState state;
  for (TokenId t : tokens) {
    if (t >= vocab.size()) throw DataError("token id " + std::to_string(t) + " outside the vocabulary");
    next_token_logits(policy, params, features, state, lp);
    log_softmax(lp);
    out.push_back(lp[t]);
    state = advance(vocab, state, t);
  }
  return out;
}

double kl_divergence(std::span<const double> logp, std::span<const double> logq) {
  double kl = 0.0;
  for (std::size_t v = 0; v < logp.size(); ++v) kl += std::exp(logp[v]) * (logp[v] - logq[v]);
  return std::max(kl, 0.0);
}

double exact_kl(const Policy& policy, const PolicyParams& params, const PolicyParams& ref,
                std::span<const double> features, std::span<const TokenId> prefix) {
  check_shape(policy, params);
  check_shape(policy, ref);
  const DecodeState state = replay(policy.vocab(), prefix);
  std::vector<double> lp(policy.vocab().size());
  std::vector<double> lq(policy.vocab().size());
  next_token_logits(policy, params, features, state, lp);
  next_token_logits(policy, ref, features, state, lq);
  log_softmax(lp);
  log_softmax(lq);
  return kl_divergence(lp, lq);
}

double entropy(const Policy& policy, const PolicyParams& params, std::span<const double> features,
               std::span<const TokenId> prefix) {
  check_shape(policy, params);
  std::vector<double> lp(policy.vocab().size());
  next_token_logits(policy, params, features, replay(policy.vocab(), prefix), lp);
  log_softmax(lp);
  double h = 0.0;
  for (double l : lp) h -= std::exp(l) * l;
  return std::max(h, 0.0);
}

double schema_probability(const Policy& policy, const PolicyParams& params,
                          std::span<const double> features, std::size_t max_len) {
  check_shape(policy, params);
  const Vocabulary& vocab = policy.vocab();
  // Mass per DecodeState, indexed by schema * 2 + neighbour_seen.
  constexpr std::size_t kSlots = kNumSchemaStates * 2;
  auto slot = [](DecodeState s) {
    return static_cast<std::size_t>(s.schema) * 2 + (s.neighbour_seen ? 1 : 0);
  };
  auto state_of = [](std::size_t i) {
    return DecodeState{static_cast<SchemaState>(i / 2), (i % 2) == 1};
  };
  std::vector<double> mass(kSlots, 0.0);
  mass[slot(DecodeState{})] = 1.0;
  double valid = 0.0;
  std::vector<double> lp(vocab.size());
  for (std::size_t t = 0; t < max_len; ++t) {
    std::vector<double> next(kSlots, 0.0);
    for (std::size_t i = 0; i < kSlots; ++i) {
      if (mass[i] == 0.0) continue;
      const DecodeState s = state_of(i);
      next_token_logits(policy, params, features, s, lp);
      log_softmax(lp);
      if (s.schema == SchemaState::kAfterAnswer) {
        valid += mass[i] * std::exp(lp[Vocabulary::kEnd]);
        continue;
      }
      for (TokenId v = 0; v < vocab.size(); ++v) {
        if (v == Vocabulary::kEnd) continue;
        const DecodeState ns = advance(vocab, s, v);
        if (ns.schema == SchemaState::kOff) continue;
        next[slot(ns)] += mass[i] * std::exp(lp[v]);
      }
    }
    mass = std::move(next);
  }
  for (std::size_t i = 0; i < kSlots; ++i) {
    if (state_of(i).schema == SchemaState::kAfterAnswer) valid += mass[i];
  }
  return valid;
}

void accumulate_logit_grad(const Policy& policy, std::span<const double> features, DecodeState state,
                           std::span<const double> dlogits, PolicyParams& grad) {
  const std::size_t v_count = policy.vocab().size();
  for (TokenId v = 0; v < v_count; ++v) {
    grad.bias(v) += dlogits[v];
    grad.state_offset(state.schema, v) += dlogits[v];
  }
  for_visible_features(policy.layout(), features, state, [&](std::size_t k) {
    const double phi = features[k];
    for (TokenId v = 0; v < v_count; ++v) grad.weight(k, v) += phi * dlogits[v];
  });
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr std::string_view kCheckpointMagic = "NGRPO-POLICY v1";

std::string expect_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("checkpoint truncated before " + std::string(what));
  return line;
}

std::string_view expect_key(std::string_view line, std::string_view key) {
  if (!line.starts_with(key) || line.size() <= key.size() || line[key.size()] != ' ') {
    throw DataError("checkpoint: expected '" + std::string(key) + "' line");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

void save_checkpoint(const Policy& policy, const PolicyParams& params,
                     const std::filesystem::path& path) {
  check_shape(policy, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const auto& cfg = policy.config();
  const auto& vocab = policy.vocab();
  out << kCheckpointMagic << '\n';
  out << "feature_dim " << cfg.feature_dim << '\n';
  out << "feature_seed " << cfg.feature_seed << '\n';
  out << "schema_prior " << format_double(cfg.schema_prior) << '\n';
  out << "reason_words " << vocab.num_reason() << '\n';
  out << "classes " << vocab.num_classes() << '\n';
  out << "vocab " << vocab.size() << '\n';
  for (const auto& w : vocab.words()) out << w << '\n';
  auto write_row = [&](std::span<const double> row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ' ';
      out << format_double(row[i]);
    }
    out << '\n';
  };
  const auto flat = params.flat();
  const std::size_t v_count = vocab.size();
  const std::size_t rows = flat.size() / v_count;
  out << "params " << rows << ' ' << v_count << '\n';
  for (std::size_t r = 0; r < rows; ++r) write_row(flat.subspan(r * v_count, v_count));
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  if (expect_line(in, "magic") != kCheckpointMagic) {
    throw DataError("not a policy checkpoint (bad magic): " + path.string());
  }
  PolicyConfig cfg;
  cfg.feature_dim = static_cast<std::size_t>(
      parse_uint(expect_key(expect_line(in, "feature_dim"), "feature_dim"), "feature_dim"));
  cfg.feature_seed = static_cast<std::uint64_t>(
      parse_uint(expect_key(expect_line(in, "feature_seed"), "feature_seed"), "feature_seed"));
  cfg.schema_prior =
      parse_double(expect_key(expect_line(in, "schema_prior"), "schema_prior"), "schema_prior");
  const auto n_reason = static_cast<std::size_t>(
      parse_uint(expect_key(expect_line(in, "reason_words"), "reason_words"), "reason_words"));
  const auto n_classes = static_cast<std::size_t>(
      parse_uint(expect_key(expect_line(in, "classes"), "classes"), "classes"));
  const auto n_vocab =
      static_cast<std::size_t>(parse_uint(expect_key(expect_line(in, "vocab"), "vocab"), "vocab"));
  if (n_vocab != Vocabulary::kNumStructural + n_reason + n_classes) {
    throw DataError("checkpoint vocabulary size is inconsistent");
  }
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n_vocab; ++i) words.push_back(expect_line(in, "vocabulary"));
  cfg.reason_words.assign(words.begin() + Vocabulary::kNumStructural,
                          words.begin() + static_cast<std::ptrdiff_t>(Vocabulary::kNumStructural + n_reason));
  Policy policy = Policy::for_classes(n_classes, cfg);
  if (policy.vocab().words() != words) throw DataError("checkpoint vocabulary listing is inconsistent");

  PolicyParams params = PolicyParams::zeros(policy);
  const std::string dims_line = expect_line(in, "params");
  auto dims = split_whitespace(expect_key(dims_line, "params"));
  const std::size_t rows = params.flat().size() / n_vocab;
  if (dims.size() != 2 || static_cast<std::size_t>(parse_uint(dims[0], "rows")) != rows ||
      static_cast<std::size_t>(parse_uint(dims[1], "cols")) != n_vocab) {
    throw DataError("checkpoint parameter shape does not match its architecture");
  }
  auto flat = params.flat();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string line = expect_line(in, "parameters");
    auto parts = split_whitespace(line);
    if (parts.size() != n_vocab) throw DataError("checkpoint parameter row has the wrong width");
    for (std::size_t c = 0; c < n_vocab; ++c) {
      flat[r * n_vocab + c] = parse_double(parts[c], "parameter");
    }
  }
  if (!params.all_finite()) throw DataError("checkpoint contains non-finite parameters");
  return Checkpoint{std::move(policy), std::move(params)};
}

}  // namespace ngrpo
