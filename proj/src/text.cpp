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

#include "decontext/text.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "decontext/errors.hpp"

namespace decontext {
namespace {

// Generated from data/stopwords.txt at configure time.
constexpr const char* kDefaultStopwords =
#include "stopwords_data.inc"
    ;

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_split_char(char c) {
  return kPunctuationChars.find(c) != std::string_view::npos;
}

char to_lower_ascii(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

Sentence::Sentence(std::string text) : text_(std::move(text)) {
  if (trim(text_).empty()) {
    throw InvalidSentence("sentence is empty");
  }
  if (text_.find_first_of("[]") != std::string::npos) {
    throw InvalidSentence("sentence contains bracket delimiters: " + text_);
  }
}

BracketedSentence::BracketedSentence(std::string text)
    : text_(std::move(text)) {
  bool open = false;
  for (char c : text_) {
    if (c == '[') {
      if (open) throw UnbalancedBrackets("nested bracket in: " + text_);
      open = true;
    } else if (c == ']') {
      if (!open) throw UnbalancedBrackets("unmatched ']' in: " + text_);
      open = false;
      ++pairs_;
    }
  }
  if (open) throw UnbalancedBrackets("unclosed '[' in: " + text_);
  if (remove_delimiters(text_).empty()) {
    throw InvalidSentence("bracketed sentence has no content");
  }
}

TokenSequence tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char c : text) {
    if (is_space(c) || c == '[' || c == ']') {
      flush();
    } else if (is_split_char(c)) {
      flush();
      tokens.emplace_back(1, c);
    } else {
      current.push_back(to_lower_ascii(c));
    }
  }
  flush();
  return TokenSequence(std::move(tokens));
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::string remove_delimiters(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (c != '[' && c != ']') out.push_back(c);
  }
  return normalize_whitespace(out);
}

bool brackets_balanced(std::string_view text) {
  bool open = false;
  for (char c : text) {
    if (c == '[') {
      if (open) return false;
      open = true;
    } else if (c == ']') {
      if (!open) return false;
      open = false;
    }
  }
  return !open;
}

StrippedSentence strip_brackets(const BracketedSentence& b) {
  // Balance is established by the BracketedSentence constructor.
  const std::string& text = b.text();
  std::vector<TokenSpan> spans;
  std::string prefix;
  std::size_t open_at = 0;
  for (char c : text) {
    if (c == '[') {
      open_at = tokenize(prefix).size();
    } else if (c == ']') {
      spans.push_back({open_at, tokenize(prefix).size()});
    } else {
      prefix.push_back(c);
    }
  }
  return {Sentence(normalize_whitespace(prefix)), std::move(spans)};
}

UnigramSet unigram_set(const TokenSequence& t) {
  return UnigramSet(t.begin(), t.end());
}

bool is_punctuation_token(std::string_view token) {
  for (char c : token) {
    if (std::isalnum(static_cast<unsigned char>(c)) ||
        static_cast<unsigned char>(c) >= 0x80) {
      return false;
    }
  }
  return !token.empty();
}

TokenSequence normalize_for_match(std::string_view text,
                                  const StopwordSet& stopwords) {
  std::vector<std::string> kept;
  for (const auto& tok : tokenize(text)) {
    if (is_punctuation_token(tok) || stopwords.contains(tok)) continue;
    kept.push_back(tok);
  }
  return TokenSequence(std::move(kept));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char c : text) {
    if (is_space(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::size_t word_count(std::string_view text) {
  return split_words(text).size();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

StopwordSet StopwordSet::Parse(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    std::string word = trim(line);
    if (word.empty() || word.front() == '#') continue;
    for (char& c : word) c = to_lower_ascii(c);
    words.insert(std::move(word));
  }
  return StopwordSet(std::move(words));
}

StopwordSet StopwordSet::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open stopword file " + path.string(), 0);
  return Parse(in);
}

const StopwordSet& StopwordSet::Default() {
  static const StopwordSet kSet = [] {
    std::istringstream in(kDefaultStopwords);
    return Parse(in);
  }();
  return kSet;
}

}  // namespace decontext
