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

// Automatic evaluation: length increase, % edited, exact match against any
// reference, unigram SARI add/delete with fractional multi-reference counts,
// and mean pairwise Jaccard annotator agreement.

#ifndef DECONTEXT_METRICS_HPP_
#define DECONTEXT_METRICS_HPP_

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "decontext/text.hpp"

namespace decontext {

struct EvalItem {
  Sentence source;
  Sentence system_output;
  std::vector<Sentence> references;  // non-empty
  std::optional<Sentence> human_output;
};

struct EditSets {
  UnigramSet added;
  UnigramSet deleted;
};

EditSets edit_sets(std::string_view source, std::string_view target);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Additive micro-average counters. Shards may be merged with +=.
struct SariAccumulator {
  double add_num_p = 0, add_den_p = 0, add_num_r = 0, add_den_r = 0;
  double del_num_p = 0, del_den_p = 0, del_num_r = 0, del_den_r = 0;

  SariAccumulator& operator+=(const SariAccumulator& o);
  // Zero denominators read as 0; F1 is 0 when P + R is 0.
  Prf add() const;
  Prf del() const;
};

// Throws Error when the item has no references.
void sari_update(SariAccumulator& acc, const EvalItem& item);

bool exact_match(const EvalItem& item, const StopwordSet& stopwords);

// Whether a reference counts as edited relative to its source (compared in
// the exact-match normalization).
bool reference_has_edit(const Sentence& source, const Sentence& reference,
                        const StopwordSet& stopwords);

struct CorpusReport {
  double len_inc_pct = 0;
  double pct_edited = 0;
  double pct_match_all = 0;
  double pct_match_edit_only = 0;
  Prf sari_add;
  Prf sari_del;
  std::size_t item_count = 0;
  std::size_t edit_only_count = 0;
  SariAccumulator counts;
};

// Throws EmptyCorpus.
CorpusReport corpus_report(const std::vector<EvalItem>& items,
                           const StopwordSet& stopwords);

nlohmann::json report_to_json(const CorpusReport& report);

// Aligned text table in the column order
// Method | Len inc. | % edit | % match all / edit | SARI add | SARI del.
std::string report_to_table(const CorpusReport& report,
                            const std::string& method);

struct Agreement {
  double add = 0;
  double del = 0;
};

// annotations[i][a] is annotator a's sentence for item i; every item needs at
// least two annotators. Throws MisalignedAnnotations.
Agreement annotator_agreement(
    const std::vector<std::vector<Sentence>>& annotations,
    const std::vector<Sentence>& sources);

}  // namespace decontext

#endif  // DECONTEXT_METRICS_HPP_
