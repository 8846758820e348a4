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

// Prompt catalog: the instruction text for every edit node, the cutoff check,
// and the two dataset-preparation prompts.

#ifndef DECONTEXT_PROMPTS_HPP_
#define DECONTEXT_PROMPTS_HPP_

#include <array>
#include <string>
#include <string_view>

namespace decontext {

// Bumped whenever a prompt or the message rendering changes, since cache keys
// and mock digests depend on both.
inline constexpr std::string_view kPromptCatalogVersion = "1";

enum class EditType { kNp, kName, kDel, kAdd };

inline constexpr std::array<EditType, 4> kDefaultNodeOrder = {
    EditType::kNp, EditType::kName, EditType::kDel, EditType::kAdd};

std::string_view to_string(EditType type);
// Accepts "NP", "NAME", "DEL", "ADD" (case-insensitive). Throws Error.
EditType parse_edit_type(std::string_view name);

std::string_view bracket_prompt(EditType type);
std::string_view replace_prompt(EditType type);

inline constexpr std::string_view kCutoffPrompt =
    "Given a context and a sentence, decide whether the meaning of the "
    "sentence can be understood without the context. Answer \"True\" if the "
    "sentence can be understood without context, and \"False\" otherwise.";

inline constexpr std::string_view kCleaningPrompt =
    "Given an annotated conversation between two people, clean the "
    "conversation by removing all annotations and backchannels.";

inline constexpr std::string_view kRatingPrompt =
    "Given a sentence and context sentences, provide a numerical quality "
    "rating between 1 (worst quality) and 5 (best quality) based on the "
    "following criteria:\n"
    "\n"
    "- Whether every sentence is fluent and natural.\n"
    "\n"
    "- Whether the sentences have interesting content.\n"
    "\n"
    "- Whether the sentence can be understood given the provided context.\n"
    "\n"
    "Do not give an explanation. Just give a single integer between 1 and 5.";

}  // namespace decontext

#endif  // DECONTEXT_PROMPTS_HPP_
