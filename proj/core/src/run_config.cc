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

#include "ngrpo/run_config.h"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "ngrpo/errors.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

namespace {

struct Entry {
  ConfigKey key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

std::uint64_t to_u64(std::string_view v, std::string_view key) {
  try {
    return parse_uint(v, key);
  } catch (const DataError&) {
    throw ConfigError(std::string(key) + ": expected an unsigned integer, got '" +
                      std::string(trim(v)) + "'");
  }
}

std::size_t to_size(std::string_view v, std::string_view key) {
  return static_cast<std::size_t>(to_u64(v, key));
}

bool to_bool(std::string_view v, std::string_view key) {
  const std::string_view s = trim(v);
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError(std::string(key) + ": expected a boolean, got '" + std::string(s) + "'");
}

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ',';
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_words(std::string_view v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v) {
    if (ch == ',') {
      out.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.emplace_back(trim(cur));
  return out;
}

// Wraps parse errors from text_format (DataError) as ConfigError.
template <typename Fn>
auto as_config(std::string_view key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

#define NGRPO_SIZE(name, field, help)                                                      \
  Entry {                                                                                  \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = to_size(v, name); },    \
        [](const RunConfig& c) { return std::to_string(c.field); }                         \
  }
#define NGRPO_U64(name, field, help)                                                       \
  Entry {                                                                                  \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = to_u64(v, name); },     \
        [](const RunConfig& c) { return std::to_string(c.field); }                         \
  }
#define NGRPO_REAL(name, field, help)                                                      \
  Entry {                                                                                  \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = parse_double(v, name); }, \
        [](const RunConfig& c) { return format_double(c.field); }                          \
  }
#define NGRPO_BOOL(name, field, help)                                                      \
  Entry {                                                                                  \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = to_bool(v, name); },    \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }         \
  }
#define NGRPO_PATH(name, field, help)                                                      \
  Entry {                                                                                  \
    {name, help}, [](RunConfig& c, std::string_view v) { c.field = std::string(trim(v)); }, \
        [](const RunConfig& c) { return c.field.string(); }                                \
  }

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      NGRPO_U64("seed", seed, "run seed for rollouts and evaluation (NGRPO_SEED overrides)"),
      NGRPO_PATH("dataset.path", dataset_path, "JSONL dataset; empty generates a synthetic one"),
      NGRPO_SIZE("synth.num_nodes", synth.num_nodes, "synthetic node count"),
      NGRPO_SIZE("synth.num_classes", synth.num_classes, "synthetic class count"),
      NGRPO_REAL("synth.homophily", synth.homophily, "expected share of intra-class edges"),
      NGRPO_REAL("synth.avg_degree", synth.avg_degree, "expected mean degree"),
      NGRPO_SIZE("synth.vocab_per_class", synth.vocab_per_class, "words per class vocabulary"),
      NGRPO_REAL("synth.ambiguity", synth.ambiguity, "share of nodes written with a decoy class"),
      NGRPO_U64("synth.seed", synth.seed, "generator seed"),
      NGRPO_SIZE("synth.words_per_node", synth.words_per_node, "words per node text"),
      NGRPO_REAL("synth.signal_fraction", synth.signal_fraction, "class-word share of each text"),
      NGRPO_SIZE("synth.common_vocab", synth.common_vocab, "shared filler vocabulary size"),
      NGRPO_REAL("synth.zipf_exponent", synth.zipf_exponent, "filler word rank exponent (0: uniform)"),
      NGRPO_SIZE("synth.label_words", synth.label_words, "class words in each label text (0: all)"),
      NGRPO_REAL("split.train", split_ratios.train, "training share"),
      NGRPO_REAL("split.val", split_ratios.val, "validation share"),
      NGRPO_REAL("split.test", split_ratios.test, "test share"),
      NGRPO_U64("split.seed", split_seed, "split seed"),
      Entry{{"embed.source", "hash or file"},
            [](RunConfig& c, std::string_view v) {
              const std::string s(trim(v));
              if (s != "hash" && s != "file") {
                throw ConfigError("embed.source must be 'hash' or 'file', got '" + s + "'");
              }
              c.embed_source = s;
            },
            [](const RunConfig& c) { return c.embed_source; }},
      NGRPO_PATH("embed.path", embed_path, "embedding file when embed.source = file"),
      NGRPO_SIZE("embed.dim", embed_dim, "hashed embedding dimension"),
      NGRPO_U64("embed.seed", embed_seed, "hashed embedding seed"),
      NGRPO_SIZE("sample.width", sample.width, "neighbours kept per prompt"),
      NGRPO_SIZE("sample.depth", sample.depth, "characters kept per neighbour text"),
      NGRPO_SIZE("sample.samples_per_node", sample.samples_per_node,
                 "neighbourhood samples per node"),
      NGRPO_SIZE("policy.feature_dim", policy.feature_dim, "prompt feature dimension"),
      NGRPO_U64("policy.feature_seed", policy.feature_seed, "feature hashing seed"),
      NGRPO_REAL("policy.schema_prior", policy.schema_prior, "fixed logit offset on grammar tokens"),
      Entry{{"policy.reason_words", "comma-separated think tokens; must include neighbour"},
            [](RunConfig& c, std::string_view v) { c.policy.reason_words = split_words(v); },
            [](const RunConfig& c) { return join_words(c.policy.reason_words); }},
      NGRPO_SIZE("trainer.group_size", trainer.group_size, "rollouts per prompt (G)"),
      NGRPO_REAL("trainer.clip_eps", trainer.clip_eps, "ratio clip epsilon"),
      NGRPO_REAL("trainer.kl_coeff", trainer.kl_coeff, "KL penalty coefficient (beta)"),
      NGRPO_REAL("trainer.learning_rate", trainer.adam.learning_rate, "Adam step size"),
      NGRPO_REAL("trainer.adam_beta1", trainer.adam.beta1, "Adam first-moment decay"),
      NGRPO_REAL("trainer.adam_beta2", trainer.adam.beta2, "Adam second-moment decay"),
      NGRPO_REAL("trainer.adam_eps", trainer.adam.epsilon, "Adam epsilon"),
      NGRPO_SIZE("trainer.inner_epochs", trainer.inner_epochs, "updates per batch (mu)"),
      NGRPO_REAL("trainer.max_grad_norm", trainer.max_grad_norm,
                 "global gradient norm cap before each update (0: off)"),
      NGRPO_SIZE("trainer.batch_prompts", trainer.batch_prompts, "prompts per step (B)"),
      NGRPO_SIZE("trainer.max_len", trainer.max_len, "maximum rollout length"),
      Entry{{"trainer.advantage_mode", "grpo or drgrpo"},
            [](RunConfig& c, std::string_view v) {
              c.trainer.advantage_mode = parse_advantage_mode(trim(v));
            },
            [](const RunConfig& c) { return std::string(to_string(c.trainer.advantage_mode)); }},
      NGRPO_SIZE("trainer.steps", trainer.steps, "training steps"),
      NGRPO_SIZE("trainer.threads", trainer.threads, "worker threads"),
      NGRPO_REAL("reward.format_weight", reward.format, "format reward weight"),
      NGRPO_REAL("reward.acc_weight", reward.accuracy, "accuracy reward weight"),
      NGRPO_BOOL("shaping.enabled", trainer.shaping, "multiply rewards by the reshape factor"),
      NGRPO_REAL("shaping.alpha", shaping.alpha, "reshape sharpness"),
      NGRPO_REAL("shaping.exponent_cap", shaping.exponent_cap, "cap on alpha * |delta|"),
      NGRPO_SIZE("shaping.k", shaping_k, "aggregation hops"),
      NGRPO_SIZE("eval.seeds", eval_seeds, "evaluation seeds averaged per checkpoint"),
      NGRPO_SIZE("eval.every", eval_every, "evaluate every N steps (0: end only)"),
      NGRPO_SIZE("eval.bins", histogram_bins, "margin histogram bins"),
      NGRPO_SIZE("output.checkpoint_every", checkpoint_every, "checkpoint every N steps"),
      NGRPO_PATH("output.dir", output_dir, "output directory"),
  };
  return entries;
}

#undef NGRPO_SIZE
#undef NGRPO_U64
#undef NGRPO_REAL
#undef NGRPO_BOOL
#undef NGRPO_PATH

const Entry& find_entry(std::string_view key) {
  for (const Entry& e : registry()) {
    if (e.key.name == key) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const Entry& e : registry()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  const Entry& e = find_entry(key);
  as_config(key, [&] {
    e.set(cfg, value);
    return 0;
  });
}

std::string get_config_value(const RunConfig& cfg, std::string_view key) {
  return find_entry(key).get(cfg);
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(line_no);
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    try {
      set_config_value(cfg, key, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

bool apply_seed_env(RunConfig& cfg) {
  const char* env = std::getenv(std::string(kSeedEnvVar).c_str());
  if (env == nullptr || *env == '\0') return false;
  cfg.seed = to_u64(env, kSeedEnvVar);
  return true;
}

void validate(const RunConfig& cfg) {
  if (!cfg.dataset_path.empty() && !std::filesystem::exists(cfg.dataset_path)) {
    throw ConfigError("dataset.path does not exist: " + cfg.dataset_path.string());
  }
  if (cfg.embed_source == "file") {
    if (cfg.embed_path.empty()) throw ConfigError("embed.source = file needs embed.path");
    if (!std::filesystem::exists(cfg.embed_path)) {
      throw ConfigError("embed.path does not exist: " + cfg.embed_path.string());
    }
  }
  if (cfg.embed_dim < 2) throw ConfigError("embed.dim must be >= 2");
  const double sum = cfg.split_ratios.train + cfg.split_ratios.val + cfg.split_ratios.test;
  if (std::abs(sum - 1.0) > 1e-9 || cfg.split_ratios.train <= 0 || cfg.split_ratios.val < 0 ||
      cfg.split_ratios.test <= 0) {
    throw ConfigError("split ratios must be positive and sum to 1");
  }
  as_config("sample", [&] {
    validate(cfg.sample);
    return 0;
  });
  if (cfg.policy.feature_dim < 3) throw ConfigError("policy.feature_dim must be >= 3");
  as_config("policy.reason_words", [&] {
    Vocabulary::create(cfg.policy.reason_words, 2);
    return 0;
  });
  validate(cfg.trainer);
  if (!(cfg.reward.format >= 0.0) || !(cfg.reward.accuracy >= 0.0)) {
    throw ConfigError("reward weights must be >= 0");
  }
  if (!(cfg.shaping.alpha > 0.0)) throw ConfigError("shaping.alpha must be > 0");
  if (!(cfg.shaping.exponent_cap > 0.0)) throw ConfigError("shaping.exponent_cap must be > 0");
  if (cfg.eval_seeds < 1) throw ConfigError("eval.seeds must be >= 1");
  if (cfg.histogram_bins < 2) throw ConfigError("eval.bins must be >= 2");
  if (cfg.output_dir.empty()) throw ConfigError("output.dir must not be empty");
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : registry()) out += e.key.name + " = " + e.get(cfg) + "\n";
  return out;
}

}  // namespace ngrpo
