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

// Corpus ingestion and preparation: annotated-corpus loading and
// subselection, example-pool derivation, and the conversational
// preprocessing chain (LLM cleaning, sliding windows, quality rating).

#ifndef DECONTEXT_DATASETS_HPP_
#define DECONTEXT_DATASETS_HPP_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "decontext/gateway.hpp"
#include "decontext/pipeline.hpp"
#include "decontext/text.hpp"

namespace decontext {

struct Annotation {
  bool impossible = false;
  std::optional<std::string> text;  // present iff !impossible
};

struct RawAnnotatedItem {
  std::string id;
  std::vector<std::string> context;
  std::string sentence;
  std::vector<Annotation> annotations;
};

// Maps upstream field names onto RawAnnotatedItem. When impossible_value is
// set, the impossible field is a string compared against it; otherwise a
// boolean.
struct FieldMap {
  std::string id = "id";
  std::string context = "context";
  std::string sentence = "sentence";
  std::string annotations = "annotations";
  std::string text = "text";
  std::string impossible = "impossible";
  std::string impossible_value;

  // "key = value" lines, "#" comments.
  static FieldMap Parse(std::istream& in);
  static FieldMap Load(const std::filesystem::path& path);
};

// Throws ParseError (bad JSON) or SchemaError (missing/typed field), both
// carrying the line number.
std::vector<RawAnnotatedItem> parse_decontext(std::istream& in,
                                              const FieldMap& fields = {});
std::vector<RawAnnotatedItem> load_decontext(const std::filesystem::path& path,
                                             const FieldMap& fields = {});

struct PreparedItem {
  std::string id;
  Context context;
  Sentence sentence;
  Sentence human;
  std::vector<Sentence> references;
};

nlohmann::json prepared_to_json(const PreparedItem& item);
PreparedItem prepared_from_json(const nlohmann::json& j);
std::vector<PreparedItem> parse_prepared(std::istream& in);
std::vector<PreparedItem> load_prepared(const std::filesystem::path& path);

inline constexpr int kDefaultImpossibleThreshold = 3;

// Drops the item when at least `impossible_threshold` annotators marked it
// impossible, or when fewer than two usable annotations remain. Otherwise the
// usable annotations are sorted by byte length, longest first; the one at
// index m/2 becomes the human output and the rest the references.
std::optional<PreparedItem> subselect(
    const RawAnnotatedItem& item,
    int impossible_threshold = kDefaultImpossibleThreshold);

// A contiguous difference between source and target words: [src_begin,
// src_end) in the source was replaced by [tgt_begin, tgt_end) in the target.
struct Hunk {
  std::size_t src_begin = 0, src_end = 0;
  std::size_t tgt_begin = 0, tgt_end = 0;

  bool insertion() const { return src_begin == src_end; }
  bool deletion() const { return tgt_begin == tgt_end; }
};

// Word-level LCS alignment. Throws AmbiguousDiff when more than one optimal
// set of matched word pairs exists.
std::vector<Hunk> align_words(const std::vector<std::string>& source,
                              const std::vector<std::string>& target);

// Edit type a hunk demonstrates.
EditType classify_hunk(const Hunk& hunk, const std::vector<std::string>& source);

struct DerivedExample {
  Example example;
  // Replacement text for each bracket pair, in order.
  std::vector<std::string> fills;
};

// One positive example per edit type present in the diff (only that type's
// hunks applied), or one negative example per edit type when unchanged.
std::vector<DerivedExample> derive_examples(const Context& context,
                                            const Sentence& source,
                                            const Sentence& edited);

// Substitutes fills[i] for the i-th bracket pair and normalizes whitespace.
std::string fill_brackets(const BracketedSentence& bracketed,
                          const std::vector<std::string>& fills);

struct PoolBuild {
  ExamplePools pools;
  std::vector<std::string> warnings;
};

// Derives examples from each item's (sentence, human) pair, skipping
// ambiguous alignments with a warning, then applies filter_example_pool.
PoolBuild build_example_pool(const std::vector<PreparedItem>& prepared);

// --- conversational corpus --------------------------------------------------

struct Turn {
  std::string speaker;
  std::string text;
  friend bool operator==(const Turn&, const Turn&) = default;
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
};

// JSON-lines {conversation_id, turns: [{speaker, text}]}.
std::vector<Conversation> parse_conversations(std::istream& in);
std::vector<Conversation> load_conversations(const std::filesystem::path& path);

struct CleanedTurn {
  std::string speaker;
  std::string text;
  std::vector<std::string> sentences;
};

struct CleanOptions {
  std::size_t token_budget = 3000;
  double chars_per_token = 4.0;
};

struct CleanResult {
  std::vector<CleanedTurn> turns;
  std::size_t chunk_count = 0;
  std::vector<std::string> warnings;
};

std::string render_turns(const std::vector<Turn>& turns);

// Greedy split keeping each chunk's rendering within the character budget;
// a single oversized turn forms its own chunk.
std::vector<std::vector<Turn>> chunk_turns(const std::vector<Turn>& turns,
                                           std::size_t max_chars);

// "speaker: text" lines; unlabelled lines continue the previous turn.
std::vector<Turn> parse_turns(std::string_view text);

// Strips transcription markup ({F ...}, <laughter>, [ ... + ... ], slashes)
// and drops turns with fewer than two words.
std::vector<Turn> rule_based_clean(const std::vector<Turn>& turns);

// Splits on ".", "!" or "?" followed by whitespace or the end of text.
std::vector<std::string> split_sentences(std::string_view text);

// LLM cleaning per chunk. A chunk whose call fails with TransportError, or
// whose answer has no parseable turns, is cleaned by rule_based_clean
// instead. AuthError and MockMiss propagate.
CleanResult clean_conversation(const std::vector<Turn>& turns, Gateway& gateway,
                               const GenerationConfig& generation,
                               const CleanOptions& options = {});

inline constexpr std::size_t kWindowSize = 5;
inline constexpr std::size_t kMinSentenceWords = 6;
inline constexpr std::size_t kMaxContextTurns = 2;

struct ConversationWindow {
  std::string id;
  std::string conversation_id;
  // At most two speaker-labelled turns, oldest first.
  Context context;
  std::string speaker;
  std::string sentence;
  std::optional<int> quality;
};

nlohmann::json window_to_json(const ConversationWindow& w);

std::vector<ConversationWindow> window_contexts(
    const std::string& conversation_id, const std::vector<CleanedTurn>& turns);

struct QualityResult {
  std::vector<ConversationWindow> kept;
  std::vector<std::string> warnings;
};

// Rates each window (up to 1 + retries attempts for an unparseable answer)
// and keeps those rated at least min_rating.
QualityResult quality_filter(const std::vector<ConversationWindow>& windows,
                             Gateway& gateway,
                             const GenerationConfig& generation,
                             int min_rating = 3, int retries = 2);

}  // namespace decontext

#endif  // DECONTEXT_DATASETS_HPP_
