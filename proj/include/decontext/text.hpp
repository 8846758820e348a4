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

// Shared text primitives: sentences, bracketed sentences, tokenization and
// normalization. Everything here is a pure function over immutable values.

#ifndef DECONTEXT_TEXT_HPP_
#define DECONTEXT_TEXT_HPP_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace decontext {

// A single sentence in raw surface form. Never empty after trimming and never
// contains the bracket delimiters.
class Sentence {
 public:
  // Throws InvalidSentence when the invariants do not hold.
  explicit Sentence(std::string text);

  const std::string& text() const { return text_; }

  friend bool operator==(const Sentence&, const Sentence&) = default;

 private:
  std::string text_;
};

// Ordered context, most distant sentence first. speaker_labels is either empty
// or parallel to sentences.
struct Context {
  std::vector<std::string> sentences;
  std::vector<std::string> speaker_labels;

  bool empty() const { return sentences.empty(); }
  friend bool operator==(const Context&, const Context&) = default;
};

// A sentence with "[" / "]" marked spans. Balanced, non-nested; "[]" allowed.
class BracketedSentence {
 public:
  // Throws UnbalancedBrackets, or InvalidSentence if nothing but delimiters
  // and spaces remain once the delimiters are removed.
  explicit BracketedSentence(std::string text);

  // A sentence with no brackets at all.
  static BracketedSentence Plain(const Sentence& s) {
    return BracketedSentence(s.text());
  }

  const std::string& text() const { return text_; }
  std::size_t pair_count() const { return pairs_; }
  bool has_brackets() const { return pairs_ > 0; }

  friend bool operator==(const BracketedSentence& a,
                         const BracketedSentence& b) {
    return a.text_ == b.text_;
  }

 private:
  std::string text_;
  std::size_t pairs_ = 0;
};

class StopwordSet;

// Lowercased, punctuation-split tokens. Only the tokenizer builds these.
class TokenSequence {
 public:
  TokenSequence() = default;

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  explicit TokenSequence(std::vector<std::string> tokens)
      : tokens_(std::move(tokens)) {}

  friend TokenSequence tokenize(std::string_view text);
  friend TokenSequence normalize_for_match(std::string_view text,
                                           const StopwordSet& stopwords);

  std::vector<std::string> tokens_;
};

using UnigramSet = std::set<std::string>;

// Half-open token range [begin, end) in tokenize() of the stripped sentence.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct StrippedSentence {
  Sentence sentence;
  std::vector<TokenSpan> spans;
};

class StopwordSet {
 public:
  StopwordSet() = default;
  explicit StopwordSet(std::set<std::string> words) : words_(std::move(words)) {}

  // One token per line; "#" lines and blank lines are ignored.
  static StopwordSet Parse(std::istream& in);
  static StopwordSet Load(const std::filesystem::path& path);
  // The list shipped in data/stopwords.txt, compiled in.
  static const StopwordSet& Default();

  bool contains(const std::string& token) const {
    return words_.count(token) > 0;
  }
  std::size_t size() const { return words_.size(); }

 private:
  std::set<std::string> words_;
};

// Characters split out as standalone tokens.
inline constexpr std::string_view kPunctuationChars = ".,!?;:'\"()-";

TokenSequence tokenize(std::string_view text);

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Drops every "[" and "]" (balanced or not) and normalizes whitespace.
std::string remove_delimiters(std::string_view text);

// True when every "[" closes before the next one opens.
bool brackets_balanced(std::string_view text);

// Throws UnbalancedBrackets on unbalanced or nested input.
StrippedSentence strip_brackets(const BracketedSentence& b);

UnigramSet unigram_set(const TokenSequence& t);

// A token made only of non-alphanumeric characters.
bool is_punctuation_token(std::string_view token);

// tokenize() minus punctuation and stopword tokens, order preserved.
TokenSequence normalize_for_match(std::string_view text,
                                  const StopwordSet& stopwords);

// Whitespace-delimited word count of the raw text.
std::size_t word_count(std::string_view text);

// Whitespace-separated words, surface form preserved.
std::vector<std::string> split_words(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace decontext

#endif  // DECONTEXT_TEXT_HPP_
