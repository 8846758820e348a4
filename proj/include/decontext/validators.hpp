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

// Acceptance checks applied to every substep output before it is used.

#ifndef DECONTEXT_VALIDATORS_HPP_
#define DECONTEXT_VALIDATORS_HPP_

#include <optional>
#include <string_view>

#include "decontext/text.hpp"

namespace decontext {

inline constexpr double kDefaultJaccardThreshold = 0.5;

enum class VerdictReason {
  kOk,
  kBracketMismatch,
  kUnbalanced,
  kJaccardBelowThreshold,
  kEmptyOutput,
};

std::string_view to_string(VerdictReason reason);

struct ValidationVerdict {
  bool accepted = false;
  VerdictReason reason = VerdictReason::kOk;
  // Set only when the Jaccard check ran.
  std::optional<double> similarity;

  static ValidationVerdict Accept(std::optional<double> sim = std::nullopt) {
    return {true, VerdictReason::kOk, sim};
  }
  static ValidationVerdict Reject(VerdictReason why,
                                  std::optional<double> sim = std::nullopt) {
    return {false, why, sim};
  }
};

// Output must equal the input once delimiters are removed (case preserved,
// whitespace normalized on both sides).
ValidationVerdict validate_bracketing(const Sentence& input,
                                      std::string_view output);

// |A ∩ B| / |A ∪ B|; two empty sets give 1.
double jaccard(const UnigramSet& a, const UnigramSet& b);

// Jaccard over the lowercase unigrams of both texts.
double jaccard_unigrams(std::string_view a, std::string_view b);

ValidationVerdict validate_replacement(
    const BracketedSentence& input, std::string_view output,
    double threshold = kDefaultJaccardThreshold);

}  // namespace decontext

#endif  // DECONTEXT_VALIDATORS_HPP_
