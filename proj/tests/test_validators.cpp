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

#include <random>

#include <gtest/gtest.h>

#include "decontext/validators.hpp"

namespace decontext {
namespace {

TEST(ValidateBracketing, AcceptsSpanMarking) {
  const auto v = validate_bracketing(
      Sentence("I like the characters that he creates"),
      "I like the characters that [he] creates");
  EXPECT_TRUE(v.accepted);
  EXPECT_EQ(v.reason, VerdictReason::kOk);
  EXPECT_FALSE(v.similarity);
}

TEST(ValidateBracketing, ZeroBracketsIsLegal) {
  EXPECT_TRUE(validate_bracketing(Sentence("a b c"), "a b c").accepted);
}

TEST(ValidateBracketing, RejectsChangedText) {
  const auto v = validate_bracketing(Sentence("a b c"), "a [x] c");
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, VerdictReason::kBracketMismatch);
}

TEST(ValidateBracketing, CasingMatters) {
  EXPECT_EQ(validate_bracketing(Sentence("He left"), "[he] left").reason,
            VerdictReason::kBracketMismatch);
}

TEST(ValidateBracketing, UnbalancedAndEmpty) {
  EXPECT_EQ(validate_bracketing(Sentence("a b"), "[a b").reason,
            VerdictReason::kUnbalanced);
  EXPECT_EQ(validate_bracketing(Sentence("a b"), "[[a]] b").reason,
            VerdictReason::kUnbalanced);
  EXPECT_EQ(validate_bracketing(Sentence("a b"), "  ").reason,
            VerdictReason::kEmptyOutput);
}

TEST(ValidateBracketing, EmptyPairsAndSpacing) {
  EXPECT_TRUE(validate_bracketing(Sentence("Cosey won  ."), "Cosey won [] .")
                  .accepted);
}

TEST(Jaccard, FormulaCases) {
  EXPECT_DOUBLE_EQ(jaccard_unigrams("a b c", "a b c"), 1.0);
  EXPECT_DOUBLE_EQ(jaccard_unigrams("a b c", "b c d"), 0.5);
  EXPECT_DOUBLE_EQ(jaccard_unigrams("", ""), 1.0);
  EXPECT_DOUBLE_EQ(jaccard_unigrams("a", ""), 0.0);
  EXPECT_DOUBLE_EQ(jaccard_unigrams("[a] b", "a b"), 1.0);
}

TEST(ValidateReplacement, AcceptsReferringExpression) {
  const auto v = validate_replacement(
      BracketedSentence("Well, mainly, I like the complex characters that [he] "
                        "creates, such as Tyrion."),
      "Well, mainly, I like the complex characters that [George R. R. Martin] "
      "creates, such as Tyrion.");
  EXPECT_TRUE(v.accepted);
  ASSERT_TRUE(v.similarity);
  EXPECT_GE(*v.similarity, 0.5);
}

TEST(ValidateReplacement, RejectsUnrelatedOutput) {
  const auto v = validate_replacement(BracketedSentence("a b c d e f g h"),
                                      "x y z w q r s t");
  EXPECT_FALSE(v.accepted);
  EXPECT_EQ(v.reason, VerdictReason::kJaccardBelowThreshold);
  EXPECT_DOUBLE_EQ(*v.similarity, 0.0);
}

TEST(ValidateReplacement, RejectsEmptyOutput) {
  const auto v = validate_replacement(BracketedSentence("anything [here]"), "");
  EXPECT_EQ(v.reason, VerdictReason::kEmptyOutput);
  EXPECT_FALSE(v.similarity);
  EXPECT_EQ(validate_replacement(BracketedSentence("x [y]"), "[ ]").reason,
            VerdictReason::kEmptyOutput);
}

TEST(ValidateReplacement, ThresholdIsInclusive) {
  // {a,b,c} vs {b,c,d}: J = 0.5 exactly.
  EXPECT_TRUE(validate_replacement(BracketedSentence("a [b] c"), "d b c", 0.5)
                  .accepted);
  EXPECT_FALSE(validate_replacement(BracketedSentence("a [b] c"), "d b c", 0.51)
                   .accepted);
}

TEST(ValidatorProperties, JaccardSymmetricAndReflexive) {
  std::mt19937 rng(3);
  std::uniform_int_distribution<int> word(0, 7);
  std::uniform_int_distribution<int> len(0, 6);
  for (int i = 0; i < 500; ++i) {
    std::string a;
    std::string b;
    for (int k = len(rng); k > 0; --k) a += "w" + std::to_string(word(rng)) + " ";
    for (int k = len(rng); k > 0; --k) b += "w" + std::to_string(word(rng)) + " ";
    EXPECT_DOUBLE_EQ(jaccard_unigrams(a, b), jaccard_unigrams(b, a));
    EXPECT_DOUBLE_EQ(jaccard_unigrams(a, a), 1.0);
    const double j = jaccard_unigrams(a, b);
    EXPECT_GE(j, 0.0);
    EXPECT_LE(j, 1.0);
  }
}

TEST(ValidatorProperties, AnyBalancedBracketingIsAccepted) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> len(1, 9);
  std::bernoulli_distribution coin(0.35);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> words;
    for (int k = len(rng); k > 0; --k) words.push_back("Tok" + std::to_string(k));
    std::string plain = join(words, " ");
    std::string bracketed;
    bool open = false;
    for (const auto& w : words) {
      if (!open && coin(rng)) {
        bracketed += "[";
        open = true;
      }
      bracketed += w;
      if (open && coin(rng)) {
        bracketed += "]";
        open = false;
      }
      bracketed += " ";
    }
    if (open) bracketed += "]";
    EXPECT_TRUE(validate_bracketing(Sentence(plain), bracketed).accepted)
        << bracketed;
  }
}

}  // namespace
}  // namespace decontext
