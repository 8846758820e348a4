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

#include "decontext/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "decontext/errors.hpp"

namespace decontext {

using nlohmann::json;

std::string_view to_string(Polarity p) {
  return p == Polarity::kPositive ? "positive" : "negative";
}

Polarity parse_polarity(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "positive") return Polarity::kPositive;
  if (lower == "negative") return Polarity::kNegative;
  throw Error("unknown polarity: " + std::string(name));
}

std::string_view to_string(SubstepKind kind) {
  return kind == SubstepKind::kBracket ? "bracket" : "replace";
}

// --- examples I/O -----------------------------------------------------------

json example_to_json(const Example& e) {
  json j = {{"edit_type", to_string(e.edit_type)},
            {"context", e.context.sentences},
            {"bracketed", e.bracketed.text()},
            {"edited", e.edited.text()},
            {"polarity", to_string(e.polarity)}};
  if (!e.context.speaker_labels.empty()) {
    j["speaker_labels"] = e.context.speaker_labels;
  }
  return j;
}

Example example_from_json(const json& j) {
  Context ctx;
  ctx.sentences = j.at("context").get<std::vector<std::string>>();
  if (j.contains("speaker_labels")) {
    ctx.speaker_labels = j.at("speaker_labels").get<std::vector<std::string>>();
  }
  Example e{parse_edit_type(j.at("edit_type").get<std::string>()),
            std::move(ctx),
            BracketedSentence(j.at("bracketed").get<std::string>()),
            Sentence(j.at("edited").get<std::string>()),
            parse_polarity(j.at("polarity").get<std::string>())};
  if (e.polarity == Polarity::kNegative &&
      (e.bracketed.has_brackets() ||
       normalize_whitespace(e.edited.text()) !=
           strip_brackets(e.bracketed).sentence.text())) {
    throw Error("negative example must be unbracketed and unedited");
  }
  return e;
}

ExamplePools parse_example_pools(std::istream& in) {
  ExamplePools pools;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (normalize_whitespace(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      Example e = example_from_json(j);
      pools[e.edit_type].push_back(std::move(e));
    } catch (const json::exception& e) {
      throw SchemaError(e.what(), line_no);
    } catch (const Error& e) {
      throw SchemaError(e.what(), line_no);
    }
  }
  return pools;
}

ExamplePools load_example_pools(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open example pool " + path.string(), 0);
  return parse_example_pools(in);
}

// --- config -----------------------------------------------------------------

void PipelineConfig::validate() const {
  auto ratio_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
  if (retries_per_substep < 0) throw Error("retries_per_substep must be >= 0");
  if (k_examples < 0) throw Error("k_examples must be >= 0");
  if (!ratio_ok(positive_ratio) || !ratio_ok(cutoff_positive_ratio) ||
      !ratio_ok(jaccard_threshold)) {
    throw Error("ratios must lie in [0, 1]");
  }
}

// --- rendering --------------------------------------------------------------

std::pair<std::string, std::string> render_bracket_example(const Example& e) {
  return {strip_brackets(e.bracketed).sentence.text(), e.bracketed.text()};
}

std::pair<std::string, std::string> render_replace_example(const Example& e) {
  return {render_contexted_input(e.context, e.bracketed.text()),
          e.edited.text()};
}

std::pair<std::string, std::string> render_cutoff_example(const Example& e) {
  // A positive example needed edits, so it is not yet context-free.
  return {render_contexted_input(e.context,
                                 strip_brackets(e.bracketed).sentence.text()),
          e.polarity == Polarity::kPositive ? "False" : "True"};
}

// --- substeps ---------------------------------------------------------------

SubstepResult run_substep(SubstepKind kind, const EditNodeSpec& node,
                          const Context& context, const std::string& input,
                          const PipelineConfig& cfg, Gateway& gateway) {
  PromptSpec prompt;
  prompt.tag.node = std::string(to_string(node.edit_type));
  prompt.tag.substep = std::string(to_string(kind));
  prompt.tag.sentence = input;
  if (kind == SubstepKind::kBracket) {
    prompt.system_instruction = node.bracket_prompt;
    for (const auto& e : node.examples) {
      prompt.examples.push_back(render_bracket_example(e));
    }
    prompt.final_input = input;
  } else {
    prompt.system_instruction = node.replace_prompt;
    for (const auto& e : node.examples) {
      prompt.examples.push_back(render_replace_example(e));
    }
    prompt.final_input = render_contexted_input(context, input);
  }

  // Parsed once; both constructors validate the substep's precondition.
  std::optional<Sentence> plain;
  std::optional<BracketedSentence> bracketed;
  if (kind == SubstepKind::kBracket) {
    plain.emplace(input);
  } else {
    bracketed.emplace(input);
  }

  SubstepResult result;
  for (int attempt = 0; attempt <= cfg.retries_per_substep; ++attempt) {
    prompt.tag.attempt = attempt;
    std::string output = gateway.complete(prompt, cfg.generation);
    ValidationVerdict verdict =
        kind == SubstepKind::kBracket
            ? validate_bracketing(*plain, output)
            : validate_replacement(*bracketed, output, cfg.jaccard_threshold);
    result.attempts.push_back({output, verdict});
    if (verdict.accepted) {
      result.output = std::move(output);
      result.accepted = true;
      return result;
    }
  }
  result.output = input;
  return result;
}

NodeResult run_edit_node(const EditNodeSpec& node, const Context& context,
                         const Sentence& sentence, const PipelineConfig& cfg,
                         Gateway& gateway) {
  NodeTrace trace;
  trace.edit_type = node.edit_type;
  trace.node_input = sentence.text();
  auto unchanged = [&](NodeTrace t) {
    t.node_output = sentence.text();
    return NodeResult{sentence, std::move(t)};
  };

  SubstepResult br = run_substep(SubstepKind::kBracket, node, context,
                                 sentence.text(), cfg, gateway);
  trace.bracket_attempts = std::move(br.attempts);
  if (!br.accepted) return unchanged(std::move(trace));
  const BracketedSentence bracketed(br.output);
  if (!bracketed.has_brackets()) return unchanged(std::move(trace));

  SubstepResult rp = run_substep(SubstepKind::kReplace, node, context,
                                 bracketed.text(), cfg, gateway);
  trace.replace_attempts = std::move(rp.attempts);
  if (!rp.accepted) return unchanged(std::move(trace));

  Sentence out(remove_delimiters(rp.output));
  trace.node_output = out.text();
  return NodeResult{std::move(out), std::move(trace)};
}

bool run_cutoff_check(const Context& context, const Sentence& sentence,
                      const std::vector<Example>& examples, EditType before,
                      const PipelineConfig& cfg, Gateway& gateway,
                      std::vector<std::string>* attempts) {
  PromptSpec prompt;
  prompt.system_instruction = std::string(kCutoffPrompt);
  for (const auto& e : examples) {
    prompt.examples.push_back(render_cutoff_example(e));
  }
  prompt.final_input = render_contexted_input(context, sentence.text());
  prompt.tag.node = std::string(to_string(before));
  prompt.tag.substep = "cutoff";
  prompt.tag.sentence = sentence.text();
  for (int attempt = 0; attempt <= cfg.retries_per_substep; ++attempt) {
    prompt.tag.attempt = attempt;
    std::string answer = gateway.complete(prompt, cfg.generation);
    if (attempts) attempts->push_back(answer);
    try {
      return parse_boolean(answer);
    } catch (const UnparseableBoolean&) {
    }
  }
  return false;
}

// --- orchestration ----------------------------------------------------------

std::size_t PipelineTrace::gateway_calls() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.gateway_calls();
  return n;
}

DecontextResult decontextualize(const ContextedSentence& item,
                                const std::vector<EditNodeSpec>& nodes,
                                const PipelineConfig& cfg, Gateway& gateway) {
  if (nodes.empty()) throw Error("pipeline has no edit nodes");
  Sentence current = item.sentence;
  PipelineTrace trace;
  bool stopped = false;
  for (const auto& node : nodes) {
    if (stopped) {
      NodeTrace t;
      t.edit_type = node.edit_type;
      t.node_input = t.node_output = current.text();
      t.skipped = true;
      trace.nodes.push_back(std::move(t));
      continue;
    }
    std::vector<std::string> cutoff_attempts;
    std::optional<bool> cutoff;
    if (cfg.with_checks && node.preceded_by_check) {
      cutoff = run_cutoff_check(item.context, current, node.check_examples,
                                node.edit_type, cfg, gateway, &cutoff_attempts);
      if (*cutoff) {
        NodeTrace t;
        t.edit_type = node.edit_type;
        t.cutoff_result = true;
        t.cutoff_attempts = std::move(cutoff_attempts);
        t.node_input = t.node_output = current.text();
        t.skipped = true;
        trace.nodes.push_back(std::move(t));
        stopped = true;
        continue;
      }
    }
    NodeResult r = run_edit_node(node, item.context, current, cfg, gateway);
    r.trace.cutoff_result = cutoff;
    r.trace.cutoff_attempts = std::move(cutoff_attempts);
    current = std::move(r.output);
    trace.nodes.push_back(std::move(r.trace));
  }
  return {std::move(current), std::move(trace)};
}

namespace {

json attempts_json(const std::vector<Attempt>& attempts) {
  json arr = json::array();
  for (const auto& a : attempts) {
    json rec = {{"output", a.output},
                {"accepted", a.verdict.accepted},
                {"reason", to_string(a.verdict.reason)}};
    if (a.verdict.similarity) rec["similarity"] = *a.verdict.similarity;
    arr.push_back(std::move(rec));
  }
  return arr;
}

}  // namespace

json trace_to_json(const PipelineTrace& trace) {
  json nodes = json::array();
  for (const auto& n : trace.nodes) {
    nodes.push_back({
        {"edit_type", to_string(n.edit_type)},
        {"cutoff_result",
         n.cutoff_result ? json(*n.cutoff_result) : json(nullptr)},
        {"cutoff_attempts", n.cutoff_attempts},
        {"bracket_attempts", attempts_json(n.bracket_attempts)},
        {"replace_attempts", attempts_json(n.replace_attempts)},
        {"node_input", n.node_input},
        {"node_output", n.node_output},
        {"skipped", n.skipped},
    });
  }
  return {{"nodes", std::move(nodes)},
          {"gateway_calls", trace.gateway_calls()}};
}

// --- example selection ------------------------------------------------------

namespace {

// Unbiased draw in [0, n); the standard distributions are not portable.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

std::vector<const Example*> sample(std::vector<const Example*> items,
                                   std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + bounded(rng, items.size() - i);
    std::swap(items[i], items[j]);
  }
  items.resize(count);
  return items;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::vector<Example> select_examples(const std::vector<Example>& pool, int k,
                                     double positive_ratio,
                                     std::uint64_t seed) {
  if (k <= 0) return {};
  const auto n_pos = static_cast<std::size_t>(
      std::floor(static_cast<double>(k) * positive_ratio + 0.5));
  const std::size_t n_neg = static_cast<std::size_t>(k) - n_pos;
  std::vector<const Example*> pos;
  std::vector<const Example*> neg;
  for (const auto& e : pool) {
    (e.polarity == Polarity::kPositive ? pos : neg).push_back(&e);
  }
  if (pos.size() < n_pos) {
    throw InsufficientPool("need " + std::to_string(n_pos) +
                           " positive examples, pool has " +
                           std::to_string(pos.size()));
  }
  if (neg.size() < n_neg) {
    throw InsufficientPool("need " + std::to_string(n_neg) +
                           " negative examples, pool has " +
                           std::to_string(neg.size()));
  }
  std::mt19937_64 rng(seed);
  const auto chosen_pos = sample(std::move(pos), n_pos, rng);
  const auto chosen_neg = sample(std::move(neg), n_neg, rng);

  std::vector<Example> out;
  out.reserve(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < std::max(n_pos, n_neg); ++i) {
    if (i < n_pos) out.push_back(*chosen_pos[i]);
    if (i < n_neg) out.push_back(*chosen_neg[i]);
  }
  return out;
}

std::vector<Example> filter_example_pool(
    const std::vector<Example>& candidates) {
  std::vector<Example> kept;
  for (const auto& e : candidates) {
    const auto n_ctx = e.context.sentences.size();
    if (n_ctx < 1 || n_ctx > 2) continue;
    bool short_enough =
        word_count(strip_brackets(e.bracketed).sentence.text()) <
            kMaxExampleWords &&
        word_count(e.edited.text()) < kMaxExampleWords;
    for (const auto& c : e.context.sentences) {
      short_enough = short_enough && word_count(c) < kMaxExampleWords;
    }
    if (short_enough) kept.push_back(e);
  }
  return kept;
}

// --- node construction ------------------------------------------------------

namespace {

EditNodeSpec make_node(EditType type, EditType pool_type, bool check,
                       std::string bracket, std::string replace,
                       const ExamplePools& pools, const PipelineConfig& cfg,
                       std::size_t index) {
  static const std::vector<Example> kEmpty;
  auto it = pools.find(pool_type);
  const auto& pool = it == pools.end() ? kEmpty : it->second;
  EditNodeSpec node;
  node.edit_type = type;
  node.bracket_prompt = std::move(bracket);
  node.replace_prompt = std::move(replace);
  node.preceded_by_check = check;
  try {
    node.examples = select_examples(pool, cfg.k_examples, cfg.positive_ratio,
                                    mix_seed(cfg.rng_seed, 2 * index));
    if (check) {
      node.check_examples =
          select_examples(pool, cfg.k_examples, cfg.cutoff_positive_ratio,
                          mix_seed(cfg.rng_seed, 2 * index + 1));
    }
  } catch (const InsufficientPool& e) {
    throw InsufficientPool(std::string(to_string(pool_type)) +
                           " pool: " + e.what());
  }
  return node;
}

}  // namespace

std::vector<EditNodeSpec> default_nodes(const ExamplePools& pools,
                                        const PipelineConfig& cfg) {
  cfg.validate();
  std::vector<EditNodeSpec> nodes;
  for (std::size_t i = 0; i < kDefaultNodeOrder.size(); ++i) {
    const EditType type = kDefaultNodeOrder[i];
    const bool check = cfg.with_checks &&
                       (type == EditType::kDel || type == EditType::kAdd);
    nodes.push_back(make_node(type, type, check,
                              std::string(bracket_prompt(type)),
                              std::string(replace_prompt(type)), pools, cfg,
                              i));
  }
  return nodes;
}

std::vector<EditNodeSpec> nodes_from_config(const json& config,
                                            const ExamplePools& pools,
                                            const PipelineConfig& cfg) {
  cfg.validate();
  const json& list = config.at("nodes");
  if (!list.is_array() || list.empty()) {
    throw Error("node config needs a non-empty 'nodes' array");
  }
  std::vector<EditNodeSpec> nodes;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& n = list[i];
    const EditType type = parse_edit_type(n.at("edit_type").get<std::string>());
    const EditType pool_type =
        n.contains("pool") ? parse_edit_type(n.at("pool").get<std::string>())
                           : type;
    const bool default_check =
        type == EditType::kDel || type == EditType::kAdd;
    const bool check =
        cfg.with_checks && n.value("preceded_by_check", default_check);
    nodes.push_back(make_node(
        type, pool_type, check,
        n.value("bracket_prompt", std::string(bracket_prompt(type))),
        n.value("replace_prompt", std::string(replace_prompt(type))), pools,
        cfg, i));
  }
  return nodes;
}

}  // namespace decontext
