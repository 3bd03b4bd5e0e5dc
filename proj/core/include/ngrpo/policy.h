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

#ifndef NGRPO_POLICY_H_
#define NGRPO_POLICY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ngrpo/graph.h"
#include "ngrpo/prompt.h"

namespace ngrpo {

using TokenId = std::uint32_t;

// Token inventory: five structural tokens, free-form reason words (one of
// which must be "neighbour"), and one identifier token per class id.
class Vocabulary {
 public:
  static constexpr TokenId kThinkOpen = 0;
  static constexpr TokenId kThinkClose = 1;
  static constexpr TokenId kAnswerOpen = 2;
  static constexpr TokenId kAnswerClose = 3;
  static constexpr TokenId kEnd = 4;
  static constexpr std::size_t kNumStructural = 5;

  static Vocabulary create(const std::vector<std::string>& reason_words, std::size_t num_classes);

  std::size_t size() const { return words_.size(); }
  std::size_t num_reason() const { return num_reason_; }
  std::size_t num_classes() const { return size() - kNumStructural - num_reason_; }

  TokenId reason(std::size_t r) const { return static_cast<TokenId>(kNumStructural + r); }
  TokenId identifier(ClassId c) const {
    return static_cast<TokenId>(kNumStructural + num_reason_ + static_cast<std::size_t>(c));
  }
  TokenId neighbour_token() const { return neighbour_; }

  bool is_reason(TokenId t) const { return t >= kNumStructural && t < kNumStructural + num_reason_; }
  bool is_identifier(TokenId t) const { return t >= kNumStructural + num_reason_ && t < size(); }
  ClassId class_of(TokenId t) const {
    return static_cast<ClassId>(t - kNumStructural - num_reason_);
  }

  const std::string& text(TokenId t) const { return words_.at(t); }
  const std::vector<std::string>& words() const { return words_; }
  std::optional<TokenId> find(std::string_view word) const;

  // Space-joined token texts; END renders as nothing and stops the text.
  std::string detokenise(std::span<const TokenId> tokens) const;
  // Inverse of detokenise. Throws DataError on an unknown word.
  std::vector<TokenId> tokenise(std::string_view text) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> words_;
  std::size_t num_reason_ = 0;
  TokenId neighbour_ = 0;
};

inline const std::vector<std::string>& default_reason_words() {
  static const std::vector<std::string> words = {"target", "neighbour", "topic", "evidence"};
  return words;
}

// Position in the response grammar
//   <think> body* </think> <answer> id </answer> END
// Any token that breaks the grammar moves to kOff, which is absorbing.
enum class SchemaState : std::uint8_t {
  kStart,
  kThink,
  kAfterThink,
  kAnswer,
  kAfterId,
  kAfterAnswer,
  kOff,
};
inline constexpr std::size_t kNumSchemaStates = 7;

struct DecodeState {
  SchemaState schema = SchemaState::kStart;
  // Set once the neighbour reason token has been emitted inside <think>.
  // Until then the neighbour block of the prompt features is hidden.
  bool neighbour_seen = false;

  bool operator==(const DecodeState&) const = default;
};

DecodeState advance(const Vocabulary& vocab, DecodeState state, TokenId token);
DecodeState replay(const Vocabulary& vocab, std::span<const TokenId> prefix);

// Fixed architecture of the policy (not trained).
struct PolicyConfig {
  std::size_t feature_dim = 192;
  std::uint64_t feature_seed = 17;
  // Constant logit offset added to the tokens the grammar expects in each
  // state. 0 gives an exactly uniform policy at zero parameters.
  double schema_prior = 3.0;
  std::vector<std::string> reason_words = default_reason_words();
};

// Feature vector layout: [target | neighbours | labels].
struct FeatureLayout {
  std::size_t target_end = 0;
  std::size_t neighbour_end = 0;
  std::size_t dim = 0;

  static FeatureLayout for_dim(std::size_t m);
};

// Signed-hash bag of words over the three prompt fields, each field salted
// and hashed into its own block. Each text contributes every distinct word
// once, so frequent filler words do not swamp the block. Each block is
// normalised and the whole vector is scaled to unit L2 norm. A prompt with no
// words maps to e_0.
std::vector<double> features(const PromptContext& ctx, std::size_t m, std::uint64_t seed);

class Policy {
 public:
  Policy(Vocabulary vocab, PolicyConfig config);
  static Policy for_classes(std::size_t num_classes, PolicyConfig config = {});

  const Vocabulary& vocab() const { return vocab_; }
  const PolicyConfig& config() const { return config_; }
  const FeatureLayout& layout() const { return layout_; }

  // Fixed schema offset for `token` in `state`.
  double prior(SchemaState state, TokenId token) const;

  std::vector<double> prompt_features(const PromptContext& ctx) const {
    return features(ctx, config_.feature_dim, config_.feature_seed);
  }

 private:
  Vocabulary vocab_;
  PolicyConfig config_;
  FeatureLayout layout_;
  std::vector<double> prior_;  // kNumSchemaStates x |V|
};

// Trainable parameters, stored flat as [W (m x |V|) | b (|V|) | T (S x |V|)]
// where T holds a learned offset per schema state.
class PolicyParams {
 public:
  PolicyParams() = default;
  PolicyParams(std::size_t feature_dim, std::size_t vocab_size);
  static PolicyParams zeros(const Policy& policy) {
    return PolicyParams(policy.config().feature_dim, policy.vocab().size());
  }

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t vocab_size() const { return vocab_size_; }

  double& weight(std::size_t k, TokenId v) { return values_[k * vocab_size_ + v]; }
  double weight(std::size_t k, TokenId v) const { return values_[k * vocab_size_ + v]; }
  double& bias(TokenId v) { return values_[feature_dim_ * vocab_size_ + v]; }
  double bias(TokenId v) const { return values_[feature_dim_ * vocab_size_ + v]; }
  double& state_offset(SchemaState s, TokenId v) { return values_[offset_index(s, v)]; }
  double state_offset(SchemaState s, TokenId v) const { return values_[offset_index(s, v)]; }

  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }

  bool all_finite() const;
  bool same_shape(const PolicyParams& other) const {
    return feature_dim_ == other.feature_dim_ && vocab_size_ == other.vocab_size_;
  }
  bool operator==(const PolicyParams&) const = default;

 private:
  std::size_t offset_index(SchemaState s, TokenId v) const {
    return (feature_dim_ + 1 + static_cast<std::size_t>(s)) * vocab_size_ + v;
  }

  std::size_t feature_dim_ = 0;
  std::size_t vocab_size_ = 0;
  std::vector<double> values_;
};

// Raw next-token logits W^T phi + b + T[state] + prior[state], with the
// neighbour block of phi hidden until state.neighbour_seen.
void next_token_logits(const Policy& policy, const PolicyParams& params,
                       std::span<const double> features, DecodeState state, std::span<double> out);

// Softmax of next_token_logits. Every probability is strictly positive.
std::vector<double> next_token_dist(const Policy& policy, const PolicyParams& params,
                                    std::span<const double> features, DecodeState state);

// In-place numerically stable log-softmax.
void log_softmax(std::span<double> logits);

struct Rollout {
  std::vector<TokenId> tokens;
  std::vector<double> logprobs_old;
  std::string text;
  ParsedResponse parsed;
};

// Ancestral sampling until END or max_len tokens. Deterministic in seed.
Rollout rollout(const Policy& policy, const PolicyParams& params, std::span<const double> features,
                std::uint64_t seed, std::size_t max_len);

// log pi(o_t | prompt, o_<t) for every position. Throws DataError on a
// token outside the vocabulary.
std::vector<double> token_logprobs(const Policy& policy, const PolicyParams& params,
                                   std::span<const double> features, std::span<const TokenId> tokens);

// Exact KL(pi_params || pi_ref) of the next-token distributions after `prefix`.
double exact_kl(const Policy& policy, const PolicyParams& params, const PolicyParams& ref,
                std::span<const double> features, std::span<const TokenId> prefix);

// KL between two explicit distributions given as log-probabilities.
double kl_divergence(std::span<const double> logp, std::span<const double> logq);

// Shannon entropy (nats) of the next-token distribution after `prefix`.
double entropy(const Policy& policy, const PolicyParams& params, std::span<const double> features,
               std::span<const TokenId> prefix);

// Exact probability that rollout(...) produces a format-valid response,
// by dynamic programming over (decode state, length).
double schema_probability(const Policy& policy, const PolicyParams& params,
                          std::span<const double> features, std::size_t max_len);

// grad += d(logits)/d(params)^T dlogits at one position.
void accumulate_logit_grad(const Policy& policy, std::span<const double> features, DecodeState state,
                           std::span<const double> dlogits, PolicyParams& grad);

// Checkpoint: versioned text header with the vocabulary and architecture,
// then parameters as shortest round-trip decimals.
void save_checkpoint(const Policy& policy, const PolicyParams& params,
                     const std::filesystem::path& path);
struct Checkpoint {
  Policy policy;
  PolicyParams params;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ngrpo

#endif  // NGRPO_POLICY_H_
