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

#include "decontext/metrics.hpp"

#include <cstdio>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "decontext/errors.hpp"
#include "decontext/validators.hpp"

namespace decontext {
namespace {

UnigramSet difference(const UnigramSet& a, const UnigramSet& b) {
  UnigramSet out;
  for (const auto& t : a) {
    if (!b.count(t)) out.insert(t);
  }
  return out;
}

double ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

Prf make_prf(double num_p, double den_p, double num_r, double den_r) {
  Prf r;
  r.precision = ratio(num_p, den_p);
  r.recall = ratio(num_r, den_r);
  const double s = r.precision + r.recall;
  r.f1 = s > 0 ? 2 * r.precision * r.recall / s : 0.0;
  return r;
}

// Adds one side (add or delete) of an item to the four counters.
void accumulate(const UnigramSet& predicted,
                const std::vector<const UnigramSet*>& gold, double& num_p,
                double& den_p, double& num_r, double& den_r) {
  const double n_refs = static_cast<double>(gold.size());
  // Number of references containing each gold unigram.
  std::map<std::string, int> support;
  for (const UnigramSet* g : gold) {
    for (const auto& tok : *g) ++support[tok];
  }
  for (const auto& tok : predicted) {
    auto it = support.find(tok);
    if (it == support.end()) continue;
    const double w = it->second / n_refs;
    num_p += w;
    num_r += w;
  }
  den_p += static_cast<double>(predicted.size());
  for (const auto& [tok, count] : support) den_r += count / n_refs;
}

}  // namespace

EditSets edit_sets(std::string_view source, std::string_view target) {
  const UnigramSet src = unigram_set(tokenize(source));
  const UnigramSet tgt = unigram_set(tokenize(target));
  return {difference(tgt, src), difference(src, tgt)};
}

SariAccumulator& SariAccumulator::operator+=(const SariAccumulator& o) {
  add_num_p += o.add_num_p;
  add_den_p += o.add_den_p;
  add_num_r += o.add_num_r;
  add_den_r += o.add_den_r;
  del_num_p += o.del_num_p;
  del_den_p += o.del_den_p;
  del_num_r += o.del_num_r;
  del_den_r += o.del_den_r;
  return *this;
}

Prf SariAccumulator::add() const {
  return make_prf(add_num_p, add_den_p, add_num_r, add_den_r);
}

Prf SariAccumulator::del() const {
  return make_prf(del_num_p, del_den_p, del_num_r, del_den_r);
}

void sari_update(SariAccumulator& acc, const EvalItem& item) {
  if (item.references.empty()) throw Error("eval item has no references");
  const EditSets out = edit_sets(item.source.text(), item.system_output.text());
  std::vector<EditSets> refs;
  refs.reserve(item.references.size());
  for (const auto& r : item.references) {
    refs.push_back(edit_sets(item.source.text(), r.text()));
  }
  std::vector<const UnigramSet*> added;
  std::vector<const UnigramSet*> deleted;
  for (const auto& r : refs) {
    added.push_back(&r.added);
    deleted.push_back(&r.deleted);
  }
  accumulate(out.added, added, acc.add_num_p, acc.add_den_p, acc.add_num_r,
             acc.add_den_r);
  accumulate(out.deleted, deleted, acc.del_num_p, acc.del_den_p, acc.del_num_r,
             acc.del_den_r);
}

bool exact_match(const EvalItem& item, const StopwordSet& stopwords) {
  const TokenSequence out =
      normalize_for_match(item.system_output.text(), stopwords);
  for (const auto& r : item.references) {
    if (normalize_for_match(r.text(), stopwords) == out) return true;
  }
  return false;
}

bool reference_has_edit(const Sentence& source, const Sentence& reference,
                        const StopwordSet& stopwords) {
  return normalize_for_match(source.text(), stopwords) !=
         normalize_for_match(reference.text(), stopwords);
}

CorpusReport corpus_report(const std::vector<EvalItem>& items,
                           const StopwordSet& stopwords) {
  if (items.empty()) throw EmptyCorpus("no items to evaluate");
  CorpusReport rep;
  rep.item_count = items.size();
  double len_sum = 0;
  std::size_t edited = 0;
  std::size_t matched = 0;
  std::size_t matched_edit_only = 0;
  for (const auto& item : items) {
    const double src_len =
        static_cast<double>(tokenize(item.source.text()).size());
    const double out_len =
        static_cast<double>(tokenize(item.system_output.text()).size());
    if (src_len > 0) len_sum += 100.0 * (out_len - src_len) / src_len;

    if (normalize_whitespace(item.source.text()) !=
        normalize_whitespace(item.system_output.text())) {
      ++edited;
    }
    const bool match = exact_match(item, stopwords);
    matched += match;

    bool all_refs_edited = true;
    for (const auto& r : item.references) {
      all_refs_edited =
          all_refs_edited && reference_has_edit(item.source, r, stopwords);
    }
    if (all_refs_edited) {
      ++rep.edit_only_count;
      matched_edit_only += match;
    }
    sari_update(rep.counts, item);
  }
  const double n = static_cast<double>(items.size());
  rep.len_inc_pct = len_sum / n;
  rep.pct_edited = 100.0 * static_cast<double>(edited) / n;
  rep.pct_match_all = 100.0 * static_cast<double>(matched) / n;
  rep.pct_match_edit_only =
      rep.edit_only_count
          ? 100.0 * static_cast<double>(matched_edit_only) /
                static_cast<double>(rep.edit_only_count)
          : 0.0;
  rep.sari_add = rep.counts.add();
  rep.sari_del = rep.counts.del();
  return rep;
}

namespace {

nlohmann::json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string prf_cell(const Prf& p) {
  return fmt("%.1f", 100 * p.f1) + " (" + fmt("%.1f", 100 * p.precision) +
         "/" + fmt("%.1f", 100 * p.recall) + ")";
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace

nlohmann::json report_to_json(const CorpusReport& r) {
  return {
      {"item_count", r.item_count},
      {"len_inc_pct", r.len_inc_pct},
      {"pct_edited", r.pct_edited},
      {"pct_match_all", r.pct_match_all},
      {"pct_match_edit_only", r.pct_match_edit_only},
      {"edit_only_count", r.edit_only_count},
      {"sari_add", prf_json(r.sari_add)},
      {"sari_del", prf_json(r.sari_del)},
      {"counts",
       {{"add_num_p", r.counts.add_num_p},
        {"add_den_p", r.counts.add_den_p},
        {"add_num_r", r.counts.add_num_r},
        {"add_den_r", r.counts.add_den_r},
        {"del_num_p", r.counts.del_num_p},
        {"del_den_p", r.counts.del_den_p},
        {"del_num_r", r.counts.del_num_r},
        {"del_den_r", r.counts.del_den_r}}},
  };
}

std::string report_to_table(const CorpusReport& r, const std::string& method) {
  const std::vector<std::string> header = {
      "Method", "Len inc.", "% edit", "% match all / edit", "SARI add F1 (P/R)",
      "SARI del F1 (P/R)"};
  const std::vector<std::string> row = {
      method,
      fmt("%.1f", r.len_inc_pct),
      fmt("%.1f", r.pct_edited),
      fmt("%.1f", r.pct_match_all) + " / " + fmt("%.1f", r.pct_match_edit_only),
      prf_cell(r.sari_add),
      prf_cell(r.sari_del)};
  std::ostringstream out;
  std::string rule;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::size_t w = std::max(header[i].size(), row[i].size());
    out << (i ? " | " : "") << pad(header[i], w);
    rule += (i ? "-+-" : "") + std::string(w, '-');
  }
  out << '\n' << rule << '\n';
  for (std::size_t i = 0; i < row.size(); ++i) {
    const std::size_t w = std::max(header[i].size(), row[i].size());
    out << (i ? " | " : "") << pad(row[i], w);
  }
  out << '\n';
  return out.str();
}

Agreement annotator_agreement(
    const std::vector<std::vector<Sentence>>& annotations,
    const std::vector<Sentence>& sources) {
  if (annotations.size() != sources.size()) {
    throw MisalignedAnnotations("annotation and source counts differ");
  }
  if (annotations.empty()) throw MisalignedAnnotations("no items");
  Agreement total;
  for (std::size_t i = 0; i < annotations.size(); ++i) {
    const auto& anns = annotations[i];
    if (anns.size() < 2) {
      throw MisalignedAnnotations("item " + std::to_string(i) +
                                  " has fewer than two annotators");
    }
    std::vector<EditSets> sets;
    for (const auto& a : anns) {
      sets.push_back(edit_sets(sources[i].text(), a.text()));
    }
    double add = 0;
    double del = 0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < sets.size(); ++a) {
      for (std::size_t b = a + 1; b < sets.size(); ++b) {
        add += jaccard(sets[a].added, sets[b].added);
        del += jaccard(sets[a].deleted, sets[b].deleted);
        ++pairs;
      }
    }
    total.add += add / static_cast<double>(pairs);
    total.del += del / static_cast<double>(pairs);
  }
  const double n = static_cast<double>(annotations.size());
  return {total.add / n, total.del / n};
}

}  // namespace decontext
