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

#include "ngrpo/grpo.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ngrpo/errors.h"
#include "ngrpo/matrix.h"
#include "ngrpo/parallel.h"
#include "ngrpo/rng.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

namespace {

// Seed-derivation domains, so prompt selection and rollout sampling never
// share a stream.
constexpr std::uint64_t kPromptDomain = 1;
constexpr std::uint64_t kNeighbourhoodDomain = 2;
constexpr std::uint64_t kRolloutDomain = 3;

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

std::string_view to_string(AdvantageMode mode) {
  return mode == AdvantageMode::kGrpo ? "grpo" : "drgrpo";
}

AdvantageMode parse_advantage_mode(std::string_view text) {
  if (text == "grpo") return AdvantageMode::kGrpo;
  if (text == "drgrpo") return AdvantageMode::kDrGrpo;
  throw ConfigError("advantage mode must be 'grpo' or 'drgrpo', got '" + std::string(text) + "'");
}

std::vector<double> advantages_drgrpo(std::span<const double> rewards) {
  if (rewards.size() < 2) throw ConfigError("a group needs at least 2 rollouts");
  const double mean = mean_of(rewards);
  std::vector<double> out(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = rewards[i] - mean;
  return out;
}

std::vector<double> advantages_grpo(std::span<const double> rewards) {
  std::vector<double> out = advantages_drgrpo(rewards);
  double var = 0.0;
  for (double a : out) var += a * a;
  const double sd = std::sqrt(var / static_cast<double>(out.size()));
  if (sd < 1e-12) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& a : out) a /= sd;
  return out;
}

std::vector<double> compute_advantages(std::span<const double> rewards, AdvantageMode mode) {
  return mode == AdvantageMode::kGrpo ? advantages_grpo(rewards) : advantages_drgrpo(rewards);
}

ObjectiveResult surrogate_objective(const Policy& policy, const PolicyParams& params,
                                    const PolicyParams& ref, const RolloutGroup& group,
                                    double clip_eps, double kl_coeff) {
  const Vocabulary& vocab = policy.vocab();
  const std::size_t v_count = vocab.size();
  if (!params.same_shape(ref) || params.vocab_size() != v_count ||
      params.feature_dim() != policy.config().feature_dim) {
    throw DataError("policy and reference parameters disagree on vocabulary or feature dimension");
  }
  const std::size_t g = group.rollouts.size();
  if (g == 0 || group.advantages.size() != g) {
    throw Error("rollout group has no rollouts or missing advantages");
  }
  const double inv_g = 1.0 / static_cast<double>(g);

  ObjectiveResult res;
  res.grad = PolicyParams(params.feature_dim(), params.vocab_size());
  std::vector<double> lp(v_count), lq(v_count), dz(v_count);

  for (std::size_t i = 0; i < g; ++i) {
    const Rollout& ro = group.rollouts[i];
    if (ro.logprobs_old.size() != ro.tokens.size()) {
      throw Error("rollout log-probabilities do not match its tokens");
    }
    const double adv = group.advantages[i];
    DecodeState state;
    for (std::size_t t = 0; t < ro.tokens.size(); ++t) {
      const TokenId tok = ro.tokens[t];
      if (tok >= v_count) throw DataError("token id outside the vocabulary");
      next_token_logits(policy, params, group.features, state, lp);
      next_token_logits(policy, ref, group.features, state, lq);
      log_softmax(lp);
      log_softmax(lq);

      const double ratio = std::exp(lp[tok] - ro.logprobs_old[t]);
      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
      const bool use_unclipped = unclipped <= clipped;

      double kl = 0.0;
      double ent = 0.0;
      for (std::size_t v = 0; v < v_count; ++v) {
        const double p = std::exp(lp[v]);
        kl += p * (lp[v] - lq[v]);
        ent -= p * lp[v];
      }
      res.objective += inv_g * ((use_unclipped ? unclipped : clipped) - kl_coeff * kl);
      res.kl_sum += kl;
      res.entropy_sum += ent;
      ++res.tokens;

      for (std::size_t v = 0; v < v_count; ++v) {
        const double p = std::exp(lp[v]);
        double d = -kl_coeff * p * ((lp[v] - lq[v]) - kl);
        if (use_unclipped) d += unclipped * ((v == tok ? 1.0 : 0.0) - p);
        dz[v] = inv_g * d;
      }
      accumulate_logit_grad(policy, group.features, state, dz, res.grad);
      state = advance(vocab, state, tok);
    }
  }
  return res;
}

Adam::Adam(std::size_t size, AdamConfig config)
    : config_(config), m_(size, 0.0), v_(size, 0.0) {}

void Adam::ascend(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw Error("optimiser state does not match the parameter size");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / bc1;
    const double v_hat = v_[i] / bc2;
    params[i] += config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
  }
}

void validate(const TrainerConfig& cfg) {
  if (cfg.group_size < 2) throw ConfigError("trainer.group_size must be >= 2");
  if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0)) throw ConfigError("trainer.clip_eps must be in (0,1)");
  if (!(cfg.kl_coeff >= 0.0) || !std::isfinite(cfg.kl_coeff)) {
    throw ConfigError("trainer.kl_coeff must be finite and >= 0");
  }
  if (!(cfg.adam.learning_rate > 0.0)) throw ConfigError("trainer.learning_rate must be > 0");
  if (!(cfg.adam.beta1 >= 0.0 && cfg.adam.beta1 < 1.0) ||
      !(cfg.adam.beta2 >= 0.0 && cfg.adam.beta2 < 1.0)) {
    throw ConfigError("adam betas must be in [0,1)");
  }
  if (!(cfg.adam.epsilon > 0.0)) throw ConfigError("trainer.adam_eps must be > 0");
  if (!(cfg.max_grad_norm >= 0.0) || !std::isfinite(cfg.max_grad_norm)) {
    throw ConfigError("trainer.max_grad_norm must be finite and >= 0");
  }
  if (cfg.inner_epochs < 1) throw ConfigError("trainer.inner_epochs must be >= 1");
  if (cfg.batch_prompts < 1) throw ConfigError("trainer.batch_prompts must be >= 1");
  if (cfg.max_len < 5) throw ConfigError("trainer.max_len must be >= 5");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
}

TrainerState init_trainer(const Policy& policy, PolicyParams start, const TrainerConfig& cfg) {
  validate(cfg);
  if (start.vocab_size() != policy.vocab().size() ||
      start.feature_dim() != policy.config().feature_dim) {
    throw DataError("initial parameters do not match the policy");
  }
  TrainerState state;
  state.ref = start;
  state.adam = Adam(start.flat().size(), cfg.adam);
  state.params = std::move(start);
  return state;
}

TrainerState init_trainer(const Policy& policy, const TrainerConfig& cfg) {
  return init_trainer(policy, PolicyParams::zeros(policy), cfg);
}

std::vector<double> reshape_table(const MarginReport& report) {
  std::vector<double> g(report.nodes.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = report.nodes[i].reshape;
  return g;
}

std::size_t response_length(const Rollout& r) {
  std::size_t n = r.tokens.size();
  if (n > 0 && r.tokens.back() == Vocabulary::kEnd) --n;
  return n;
}

double neighbour_token_frequency(const Vocabulary& vocab, std::span<const Rollout> rollouts) {
  if (rollouts.empty()) return 0.0;
  std::size_t count = 0;
  for (const Rollout& r : rollouts) {
    count += static_cast<std::size_t>(
        std::count(r.tokens.begin(), r.tokens.end(), vocab.neighbour_token()));
  }
  return static_cast<double>(count) / static_cast<double>(rollouts.size());
}

PromptContext make_node_prompt(const TextRichNetwork& net, NodeId node, const SampleSpec& spec,
                               std::uint64_t seed) {
  return build_node_prompt(sample_neighbourhood(net, node, spec, seed), net);
}

StepMetrics train_step(const Policy& policy, TrainerState& state, const TrainingData& data,
                       const TrainerConfig& cfg) {
  if (data.net == nullptr) throw Error("training data has no network");
  const TextRichNetwork& net = *data.net;
  if (data.train_nodes.empty()) throw DataError("training split is empty");
  if (cfg.shaping && data.reshape.size() != net.num_nodes()) {
    throw DataError("reshape table does not cover every node");
  }
  const std::size_t step = state.step;
  const std::size_t per_node = data.sample.samples_per_node;
  const std::size_t n_groups = cfg.batch_prompts * per_node;

  Rng prompt_rng(derive_seed(cfg.seed, {kPromptDomain, step}));
  std::vector<NodeId> prompt_nodes(cfg.batch_prompts);
  for (NodeId& node : prompt_nodes) node = data.train_nodes[prompt_rng.below(data.train_nodes.size())];

  // Rollout generation against the immutable snapshot state.params.
  std::vector<RolloutGroup> groups(n_groups);
  std::vector<std::vector<RewardBreakdown>> scores(n_groups);
  parallel_for(n_groups, cfg.threads, [&](std::size_t gi) {
    const NodeId node = prompt_nodes[gi / per_node];
    const auto gold = net.gold(node);
    if (!gold) throw DataError("training node " + std::to_string(node) + " has no gold label");
    RolloutGroup& group = groups[gi];
    group.node = node;
    const PromptContext ctx = make_node_prompt(
        net, node, data.sample, derive_seed(cfg.seed, {kNeighbourhoodDomain, step, gi}));
    group.features = policy.prompt_features(ctx);
    const double g = cfg.shaping ? data.reshape[node] : 1.0;
    for (std::size_t r = 0; r < cfg.group_size; ++r) {
      group.rollouts.push_back(rollout(policy, state.params, group.features,
                                       derive_seed(cfg.seed, {kRolloutDomain, step, gi, r}),
                                       cfg.max_len));
      scores[gi].push_back(
          score_response(group.rollouts.back().parsed, *gold, net.num_classes(), g, data.weights));
      group.rewards.push_back(scores[gi].back().final_reward);
    }
    group.advantages = compute_advantages(group.rewards, cfg.advantage_mode);
  });

  StepMetrics m;
  m.step = step;
  std::size_t n_rollouts = 0;
  std::size_t len_sum = 0;
  std::size_t fmt = 0;
  std::size_t acc = 0;
  double nb_sum = 0.0;
  for (std::size_t gi = 0; gi < n_groups; ++gi) {
    for (std::size_t r = 0; r < cfg.group_size; ++r) {
      m.mean_reward += groups[gi].rewards[r];
      m.mean_abs_advantage += std::abs(groups[gi].advantages[r]);
      len_sum += response_length(groups[gi].rollouts[r]);
      fmt += scores[gi][r].s_format > 0.0 ? 1 : 0;
      acc += scores[gi][r].s_acc > 0.0 ? 1 : 0;
      ++n_rollouts;
    }
    nb_sum += neighbour_token_frequency(policy.vocab(), groups[gi].rollouts) *
              static_cast<double>(cfg.group_size);
  }
  const double nr = static_cast<double>(n_rollouts);
  m.mean_reward /= nr;
  m.mean_abs_advantage /= nr;
  m.resp_len = static_cast<double>(len_sum) / nr;
  m.neighbour_freq = nb_sum / nr;
  m.format_rate = static_cast<double>(fmt) / nr;
  m.acc_rate = static_cast<double>(acc) / nr;

  std::vector<ObjectiveResult> results(n_groups);
  for (std::size_t epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
    parallel_for(n_groups, cfg.threads, [&](std::size_t gi) {
      results[gi] = surrogate_objective(policy, state.params, state.ref, groups[gi], cfg.clip_eps,
                                        cfg.kl_coeff);
    });
    // Batch objective is the mean over groups; reduce in group order.
    PolicyParams grad(state.params.feature_dim(), state.params.vocab_size());
    auto gflat = grad.flat();
    const double inv_groups = 1.0 / static_cast<double>(n_groups);
    double objective = 0.0;
    double kl_sum = 0.0;
    double ent_sum = 0.0;
    std::size_t tokens = 0;
    for (const ObjectiveResult& res : results) {
      const auto rflat = res.grad.flat();
      for (std::size_t k = 0; k < gflat.size(); ++k) gflat[k] += inv_groups * rflat[k];
      objective += inv_groups * res.objective;
      kl_sum += res.kl_sum;
      ent_sum += res.entropy_sum;
      tokens += res.tokens;
    }
    if (!grad.all_finite() || !std::isfinite(objective)) {
      throw NumericalError("non-finite gradient at step " + std::to_string(step) + ", epoch " +
                           std::to_string(epoch) + " (objective " + format_double(objective) + ")");
    }
    if (cfg.max_grad_norm > 0.0) {
      const double norm = l2_norm(gflat);
      if (norm > cfg.max_grad_norm) {
        const double scale = cfg.max_grad_norm / norm;
        for (double& x : gflat) x *= scale;
      }
    }
    if (epoch == 0) {
      m.objective = objective;
      m.kl = tokens ? kl_sum / static_cast<double>(tokens) : 0.0;
      m.entropy = tokens ? ent_sum / static_cast<double>(tokens) : 0.0;
    }
    state.adam.ascend(state.params.flat(), gflat);
  }
  if (!state.params.all_finite()) {
    throw NumericalError("parameters became non-finite at step " + std::to_string(step));
  }
  ++state.step;
  return m;
}

std::string metrics_csv_header() {
  return "step,mean_reward,objective,kl,entropy,resp_len,neighbour_freq,format_rate,acc_rate";
}

std::string metrics_csv_row(const StepMetrics& m) {
  std::string row = std::to_string(m.step);
  for (double x : {m.mean_reward, m.objective, m.kl, m.entropy, m.resp_len, m.neighbour_freq,
                   m.format_rate, m.acc_rate}) {
    row += ',';
    row += format_double(x);
  }
  return row;
}

}  // namespace ngrpo
