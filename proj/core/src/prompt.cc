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

#include "ngrpo/prompt.h"

#include <cctype>
#include <charconv>

#include "ngrpo/errors.h"
#include "ngrpo/prompt_templates_data.h"
#include "ngrpo/rng.h"
#include "ngrpo/text_format.h"

namespace ngrpo {

void validate(const SampleSpec& spec) {
  if (spec.depth < 1) throw ConfigError("sample.depth must be >= 1");
  if (spec.samples_per_node < 1) throw ConfigError("sample.samples_per_node must be >= 1");
}

PromptContext sample_neighbourhood(const TextRichNetwork& net, NodeId node, const SampleSpec& spec,
                                   std::uint64_t seed, std::optional<NodeId> exclude) {
  validate(spec);
  PromptContext ctx;
  ctx.task_kind = TaskKind::kNode;
  ctx.target_id = node;
  ctx.target_text = net.text(node);

  std::vector<NodeId> pool;
  for (NodeId v : net.neighbours(node)) {
    if (!exclude || v != *exclude) pool.push_back(v);
  }
  const std::size_t take = std::min(spec.width, pool.size());
  Rng rng(derive_seed(seed, {node}));
  for (std::size_t k = 0; k < take; ++k) {
    std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
  }
  pool.resize(take);
  ctx.neighbour_ids = std::move(pool);
  for (NodeId v : ctx.neighbour_ids) {
    ctx.neighbour_texts.emplace_back(utf8_truncate(net.text(v), spec.depth));
  }
  return ctx;
}

std::string render_neighbour_list(const std::vector<std::string>& texts) {
  if (texts.empty()) return std::string(kNoNeighbours);
  std::string out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (i) out += "; ";
    out += "(" + std::to_string(i + 1) + ") " + texts[i];
  }
  return out;
}

std::string render_label_block(const TextRichNetwork& net) {
  std::string out;
  for (const auto& lab : net.labels()) {
    if (!out.empty()) out += "; ";
    out += "[" + std::to_string(lab.id) + "] " + lab.text;
  }
  return out;
}

std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() * 2);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) {
        ++j;
      }
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        const std::string name(tmpl.substr(i + 1, j - i - 1));
        auto it = values.find(name);
        if (it == values.end()) throw Error("template placeholder {" + name + "} has no value");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += tmpl[i++];
  }
  return out;
}

PromptContext build_node_prompt(PromptContext ctx, const TextRichNetwork& net) {
  ctx.task_kind = TaskKind::kNode;
  ctx.label_block = render_label_block(net);
  ctx.rendered = render_template(
      templates::kNodePrompt,
      {{"target_node_text", ctx.target_text},
       {"neighbor_node_text", render_neighbour_list(ctx.neighbour_texts)},
       {"node_type", net.meta().node_type},
       {"relation", net.meta().relation},
       {"num_categories", std::to_string(net.num_classes())},
       {"labels", ctx.label_block},
       {"max_id", std::to_string(net.num_classes() - 1)}});
  return ctx;
}

PromptContext build_edge_prompt(const PromptContext& src, const PromptContext& dst,
                                const TextRichNetwork& net) {
  if (src.target_id == dst.target_id) {
    throw DataError("edge prompt needs two distinct nodes, got " + std::to_string(src.target_id) +
                    " twice");
  }
  PromptContext ctx;
  ctx.task_kind = TaskKind::kEdge;
  ctx.target_id = src.target_id;
  ctx.target_text = src.target_text;
  ctx.neighbour_ids = src.neighbour_ids;
  ctx.neighbour_texts = src.neighbour_texts;
  ctx.pair_id = dst.target_id;
  ctx.pair_text = dst.target_text;
  ctx.pair_neighbour_ids = dst.neighbour_ids;
  ctx.pair_neighbour_texts = dst.neighbour_texts;
  ctx.label_block = "[0] no link; [1] link exists";
  ctx.rendered = render_template(templates::kEdgePrompt,
                                 {{"source_node", ctx.target_text},
                                  {"target_node", ctx.pair_text},
                                  {"source_neighbors", render_neighbour_list(ctx.neighbour_texts)},
                                  {"target_neighbors", render_neighbour_list(ctx.pair_neighbour_texts)},
                                  {"node_type", net.meta().node_type},
                                  {"relation", net.meta().relation}});
  return ctx;
}

PromptContext build_graph_prompt(const std::vector<std::string>& nodes,
                                 const std::vector<GraphTriple>& edges, std::string_view question) {
  if (nodes.empty()) throw DataError("graph prompt needs at least one node");
  PromptContext ctx;
  ctx.task_kind = TaskKind::kGraph;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) ctx.target_text += "; ";
    ctx.target_text += nodes[i];
  }
  std::string edge_list;
  for (const auto& e : edges) {
    std::string triple = "(" + e.head + "; " + e.relation + "; " + e.tail + ")";
    if (!edge_list.empty()) edge_list += " ";
    edge_list += triple;
    ctx.neighbour_texts.push_back(std::move(triple));
  }
  if (edge_list.empty()) edge_list = std::string(kNoNeighbours);
  ctx.label_block = "[0] support; [1] counter";
  ctx.rendered = render_template(templates::kGraphPrompt, {{"node_list", ctx.target_text},
                                                           {"edge_list", edge_list},
                                                           {"question", std::string(question)}});
  return ctx;
}

ParsedResponse parse_response(std::string_view raw) {
  constexpr std::string_view kThinkOpen = "<think>";
  constexpr std::string_view kThinkClose = "</think>";
  constexpr std::string_view kAnswerOpen = "<answer>";
  constexpr std::string_view kAnswerClose = "</answer>";

  ParsedResponse out;
  out.raw = std::string(raw);
  std::string_view rest = trim(raw);
  if (!rest.starts_with(kThinkOpen)) return out;
  const std::size_t close = rest.find(kThinkClose, kThinkOpen.size());
  if (close == std::string_view::npos) return out;
  rest = trim(rest.substr(close + kThinkClose.size()));
  if (!rest.starts_with(kAnswerOpen) || !rest.ends_with(kAnswerClose)) return out;
  rest = rest.substr(kAnswerOpen.size(), rest.size() - kAnswerOpen.size() - kAnswerClose.size());
  const std::string_view body = trim(rest);

  std::size_t digits_from = body.starts_with('-') ? 1 : 0;
  if (body.size() == digits_from) return out;
  for (std::size_t i = digits_from; i < body.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(body[i]))) return out;
  }
  long long value = 0;
  auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (ec != std::errc() || ptr != body.data() + body.size()) return out;
  out.format_ok = true;
  out.answer = value;
  return out;
}

}  // namespace ngrpo
