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

#ifndef NGRPO_PROMPT_H_
#define NGRPO_PROMPT_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ngrpo/graph.h"

namespace ngrpo {

// Width-depth neighbourhood sampling parameters.
struct SampleSpec {
  std::size_t width = 5;     // max neighbours kept
  std::size_t depth = 256;   // max characters kept per neighbour text
  std::size_t samples_per_node = 1;
};

void validate(const SampleSpec& spec);

enum class TaskKind { kNode, kEdge, kGraph };

struct PromptContext {
  TaskKind task_kind = TaskKind::kNode;
  NodeId target_id = 0;
  std::string target_text;
  std::vector<NodeId> neighbour_ids;
  std::vector<std::string> neighbour_texts;
  // Second endpoint, edge prompts only.
  std::optional<NodeId> pair_id;
  std::string pair_text;
  std::vector<NodeId> pair_neighbour_ids;
  std::vector<std::string> pair_neighbour_texts;
  std::string label_block;
  std::string rendered;
};

// Uniform sample without replacement of min(width, degree) neighbours of
// `node`, texts truncated to `depth` code points. `exclude` removes one
// neighbour from the population (used to hide the queried link in edge
// prompts). Deterministic in (node, seed).
PromptContext sample_neighbourhood(const TextRichNetwork& net, NodeId node, const SampleSpec& spec,
                                   std::uint64_t seed, std::optional<NodeId> exclude = std::nullopt);

// Marker rendered in place of an empty neighbour list.
inline constexpr std::string_view kNoNeighbours = "(none)";

std::string render_neighbour_list(const std::vector<std::string>& texts);
std::string render_label_block(const TextRichNetwork& net);

// Single-pass substitution of {name} placeholders. Substituted values are
// inserted verbatim and never re-scanned. Throws Error on a placeholder
// without a value.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

PromptContext build_node_prompt(PromptContext ctx, const TextRichNetwork& net);

// Throws DataError when src and dst are the same node.
PromptContext build_edge_prompt(const PromptContext& src, const PromptContext& dst,
                                const TextRichNetwork& net);

struct GraphTriple {
  std::string head;
  std::string tail;
  std::string relation;
};

// Throws DataError on an empty node list.
PromptContext build_graph_prompt(const std::vector<std::string>& nodes,
                                 const std::vector<GraphTriple>& edges, std::string_view question);

struct ParsedResponse {
  bool format_ok = false;
  std::optional<long long> answer;
  std::string raw;
};

// Accepts exactly <think>...</think><answer>N</answer>, allowing whitespace
// around the tags and inside the answer body. N is a base-10 integer; it is
// not range-checked here.
ParsedResponse parse_response(std::string_view raw);

}  // namespace ngrpo

#endif  // NGRPO_PROMPT_H_
