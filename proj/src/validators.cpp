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

#include "decontext/validators.hpp"


namespace decontext {

std::string_view to_string(VerdictReason reason) {
  switch (reason) {
    case VerdictReason::kOk:
      return "OK";
    case VerdictReason::kBracketMismatch:
      return "BRACKET_MISMATCH";
    case VerdictReason::kUnbalanced:
      return "UNBALANCED";
    case VerdictReason::kJaccardBelowThreshold:
      return "JACCARD_BELOW_THRESHOLD";
    case VerdictReason::kEmptyOutput:
      return "EMPTY_OUTPUT";
  }
  return "UNKNOWN";
}

ValidationVerdict validate_bracketing(const Sentence& input,
                                      std::string_view output) {
  if (normalize_whitespace(output).empty()) {
    return ValidationVerdict::Reject(VerdictReason::kEmptyOutput);
  }
  if (!brackets_balanced(output)) {
    return ValidationVerdict::Reject(VerdictReason::kUnbalanced);
  }
  if (remove_delimiters(output) != normalize_whitespace(input.text())) {
    return ValidationVerdict::Reject(VerdictReason::kBracketMismatch);
  }
  return ValidationVerdict::Accept();
}

double jaccard(const UnigramSet& a, const UnigramSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& tok : a) common += b.count(tok);
  const std::size_t uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

double jaccard_unigrams(std::string_view a, std::string_view b) {
  return jaccard(unigram_set(tokenize(a)), unigram_set(tokenize(b)));
}

ValidationVerdict validate_replacement(const BracketedSentence& input,
                                       std::string_view output,
                                       double threshold) {
  const std::string cleaned = remove_delimiters(output);
  if (cleaned.empty()) {
    return ValidationVerdict::Reject(VerdictReason::kEmptyOutput);
  }
  const double sim =
      jaccard_unigrams(strip_brackets(input).sentence.text(), cleaned);
  if (sim < threshold) {
    return ValidationVerdict::Reject(VerdictReason::kJaccardBelowThreshold,
                                     sim);
  }
  return ValidationVerdict::Accept(sim);
}

}  // namespace decontext
