// Copyright 2026 The Decontext Authors.
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

// The decontextualization engine: an ordered list of edit nodes, each a
// bracket substep followed by a replace substep, with validation, bounded
// retries and optional cutoff checks in front of selected nodes.

#ifndef DECONTEXT_PIPELINE_HPP_
#define DECONTEXT_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "decontext/gateway.hpp"
#include "decontext/prompts.hpp"
#include "decontext/text.hpp"
#include "decontext/validators.hpp"

namespace decontext {

enum class Polarity { kPositive, kNegative };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view name);

// An in-context demonstration. Negative examples carry no brackets and an
// unchanged edited sentence.
struct Example {
  EditType edit_type = EditType::kNp;
  Context context;
  BracketedSentence bracketed;
  Sentence edited;
  Polarity polarity = Polarity::kPositive;
};

using ExamplePools = std::map<EditType, std::vector<Example>>;

// JSON-lines {edit_type, context, bracketed, edited, polarity}.
ExamplePools load_example_pools(const std::filesystem::path& path);
ExamplePools parse_example_pools(std::istream& in);
nlohmann::json example_to_json(const Example& e);
Example example_from_json(const nlohmann::json& j);

struct EditNodeSpec {
  EditType edit_type = EditType::kNp;
  std::string bracket_prompt;
  std::string replace_prompt;
  bool preceded_by_check = false;
  std::vector<Example> examples;
  // Demonstrations for the cutoff check in front of this node.
  std::vector<Example> check_examples;
};

struct PipelineConfig {
  int retries_per_substep = 2;
  int k_examples = 20;
  double positive_ratio = 0.8;
  double cutoff_positive_ratio = 0.5;
  double jaccard_threshold = kDefaultJaccardThreshold;
  bool with_checks = true;
  std::uint64_t rng_seed = 0;
  GenerationConfig generation;

  // Throws Error on out-of-range values.
  void validate() const;
};

struct ContextedSentence {
  std::string id;
  Context context;
  Sentence sentence;
};

enum class SubstepKind { kBracket, kReplace };

std::string_view to_string(SubstepKind kind);

struct Attempt {
  std::string output;
  ValidationVerdict verdict;
};

struct SubstepResult {
  // The accepted output, or the input when every attempt was rejected.
  std::string output;
  bool accepted = false;
  std::vector<Attempt> attempts;
};

struct NodeTrace {
  EditType edit_type = EditType::kNp;
  std::optional<bool> cutoff_result;
  std::vector<std::string> cutoff_attempts;
  std::vector<Attempt> bracket_attempts;
  std::vector<Attempt> replace_attempts;
  std::string node_input;
  std::string node_output;
  bool skipped = false;

  std::size_t gateway_calls() const {
    return cutoff_attempts.size() + bracket_attempts.size() +
           replace_attempts.size();
  }
};

struct PipelineTrace {
  std::vector<NodeTrace> nodes;

  std::size_t gateway_calls() const;
};

nlohmann::json trace_to_json(const PipelineTrace& trace);

// Runs one substep with up to 1 + retries_per_substep attempts. BRACKET
// renders the sentence alone; REPLACE renders context plus bracketed text.
// Validator rejections are recorded, gateway errors propagate.
SubstepResult run_substep(SubstepKind kind, const EditNodeSpec& node,
                          const Context& context, const std::string& input,
                          const PipelineConfig& cfg, Gateway& gateway);

struct NodeResult {
  Sentence output;
  NodeTrace trace;
};

// Bracket, then replace when at least one bracket pair was produced.
NodeResult run_edit_node(const EditNodeSpec& node, const Context& context,
                         const Sentence& sentence, const PipelineConfig& cfg,
                         Gateway& gateway);

// True when the sentence already stands on its own. An answer that cannot be
// parsed after all retries counts as false. Every raw answer is appended to
// `attempts` when given.
bool run_cutoff_check(const Context& context, const Sentence& sentence,
                      const std::vector<Example>& examples, EditType before,
                      const PipelineConfig& cfg, Gateway& gateway,
                      std::vector<std::string>* attempts = nullptr);

struct DecontextResult {
  Sentence output;
  PipelineTrace trace;
};

DecontextResult decontextualize(const ContextedSentence& item,
                                const std::vector<EditNodeSpec>& nodes,
                                const PipelineConfig& cfg, Gateway& gateway);

// round-half-up(k * positive_ratio) positives, the rest negatives, sampled
// without replacement and interleaved positive-first. Portable across
// platforms for a given seed. Throws InsufficientPool.
std::vector<Example> select_examples(const std::vector<Example>& pool, int k,
                                     double positive_ratio, std::uint64_t seed);

// Keeps examples with 1-2 context sentences and every sentence (context,
// target, edited) under 30 words.
std::vector<Example> filter_example_pool(const std::vector<Example>& candidates);

inline constexpr std::size_t kMaxExampleWords = 30;

// The four default nodes in NP, NAME, DEL, ADD order with checks in front of
// DEL and ADD when cfg.with_checks. Examples come from pools[edit_type].
std::vector<EditNodeSpec> default_nodes(const ExamplePools& pools,
                                        const PipelineConfig& cfg);

// JSON {"nodes": [{"edit_type", "bracket_prompt"?, "replace_prompt"?,
// "preceded_by_check"?, "pool"?}]}. Missing prompts fall back to the catalog,
// "pool" aliases another edit type's examples. Checks are only honoured when
// cfg.with_checks.
std::vector<EditNodeSpec> nodes_from_config(const nlohmann::json& config,
                                            const ExamplePools& pools,
                                            const PipelineConfig& cfg);

// Rendering of a demonstration for each prompt kind.
std::pair<std::string, std::string> render_bracket_example(const Example& e);
std::pair<std::string, std::string> render_replace_example(const Example& e);
std::pair<std::string, std::string> render_cutoff_example(const Example& e);

}  // namespace decontext

#endif  // DECONTEXT_PIPELINE_HPP_
