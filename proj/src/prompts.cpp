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

#include "decontext/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "decontext/errors.hpp"

namespace decontext {
namespace {

constexpr std::string_view kBracketNp =
    "Given a sentence, put brackets around any personal pronouns, definite "
    "pronouns, and definite noun phrases that can be replaced with more "
    "specific expressions. If there are none, give the original sentence.";

constexpr std::string_view kBracketName =
    "Given a sentence, put brackets around any acronyms, nominative pronouns, "
    "or proper names that can be replaced with more specific expressions. If "
    "there are none, give the original sentence.";

constexpr std::string_view kBracketDel =
    "Given a sentence, put brackets around any discourse markers and "
    "connectives that can only be understood in context. If there are none, "
    "give the original sentence.";

constexpr std::string_view kBracketAdd =
    "Given a sentence, insert empty brackets wherever additional modifiers "
    "should be added in order to allow the sentence to be interpretable "
    "without context. If there is no need for modifiers, give the original "
    "sentence.";

// NP and NAME share one replace instruction.
constexpr std::string_view kReplaceReferring =
    "Given a context and a sentence, replace any bracketed expressions in the "
    "sentence with a more explicit referring expression from the context or "
    "general knowledge. If there are no bracketed expressions, do nothing.";

constexpr std::string_view kReplaceDel =
    "Given a context and a sentence, remove any bracketed expressions if they "
    "are extraneous or require context to interpret. If there are no "
    "bracketed expressions or if there is no need to make any changes, do "
    "nothing.";

constexpr std::string_view kReplaceAdd =
    "Given a context and a sentence, replace any bracketed expressions (which "
    "may be empty) with additional modifiers from the context or general "
    "knowledge that make the sentence more explicit. If there are no "
    "bracketed expressions or if there is no need to make any changes, do "
    "nothing. Do not change any content except for replacing brackets.";

}  // namespace

std::string_view to_string(EditType type) {
  switch (type) {
    case EditType::kNp:
      return "NP";
    case EditType::kName:
      return "NAME";
    case EditType::kDel:
      return "DEL";
    case EditType::kAdd:
      return "ADD";
  }
  return "?";
}

EditType parse_edit_type(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "NP") return EditType::kNp;
  if (upper == "NAME") return EditType::kName;
  if (upper == "DEL") return EditType::kDel;
  if (upper == "ADD") return EditType::kAdd;
  throw Error("unknown edit type: " + std::string(name));
}

std::string_view bracket_prompt(EditType type) {
  switch (type) {
    case EditType::kNp:
      return kBracketNp;
    case EditType::kName:
      return kBracketName;
    case EditType::kDel:
      return kBracketDel;
    case EditType::kAdd:
      return kBracketAdd;
  }
  return {};
}

std::string_view replace_prompt(EditType type) {
  switch (type) {
    case EditType::kNp:
    case EditType::kName:
      return kReplaceReferring;
    case EditType::kDel:
      return kReplaceDel;
    case EditType::kAdd:
      return kReplaceAdd;
  }
  return {};
}

}  // namespace decontext
