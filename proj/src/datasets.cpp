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

#include "decontext/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

#include <nlohmann/json.hpp>

#include "decontext/errors.hpp"

namespace decontext {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) { return normalize_whitespace(s); }

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    try {
      fn(j, line_no);
    } catch (const json::exception& e) {
      throw SchemaError(e.what(), line_no);
    } catch (const InvalidSentence& e) {
      throw SchemaError(e.what(), line_no);
    } catch (const UnbalancedBrackets& e) {
      throw SchemaError(e.what(), line_no);
    }
  }
}

const json& require(const json& obj, const std::string& key,
                    std::size_t line) {
  if (!obj.is_object()) throw SchemaError("record must be an object", line);
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError("missing field '" + key + "'", line);
  return *it;
}

std::string as_id(const json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return in;
}

}  // namespace

// --- annotated corpus -------------------------------------------------------

FieldMap FieldMap::Parse(std::istream& in) {
  FieldMap m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key == "id") m.id = value;
    else if (key == "context") m.context = value;
    else if (key == "sentence") m.sentence = value;
    else if (key == "annotations") m.annotations = value;
    else if (key == "text") m.text = value;
    else if (key == "impossible") m.impossible = value;
    else if (key == "impossible_value") m.impossible_value = value;
    else throw ParseError("unknown field-map key '" + key + "'", line_no);
  }
  return m;
}

FieldMap FieldMap::Load(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return Parse(in);
}

std::vector<RawAnnotatedItem> parse_decontext(std::istream& in,
                                              const FieldMap& fields) {
  std::vector<RawAnnotatedItem> items;
  for_each_json_line(in, [&](const json& j, std::size_t line) {
    RawAnnotatedItem item;
    item.id = as_id(require(j, fields.id, line));
    const json& ctx = require(j, fields.context, line);
    if (ctx.is_string()) {
      item.context.push_back(ctx.get<std::string>());
    } else {
      item.context = ctx.get<std::vector<std::string>>();
    }
    item.sentence = require(j, fields.sentence, line).get<std::string>();
    const json& anns = require(j, fields.annotations, line);
    if (!anns.is_array() || anns.empty()) {
      throw SchemaError("'" + fields.annotations + "' must be a non-empty array",
                        line);
    }
    for (const json& a : anns) {
      Annotation ann;
      const json& flag = require(a, fields.impossible, line);
      ann.impossible = fields.impossible_value.empty()
                           ? flag.get<bool>()
                           : flag.get<std::string>() == fields.impossible_value;
      if (!ann.impossible) {
        const json& text = require(a, fields.text, line);
        if (!text.is_string()) {
          throw SchemaError("annotation text must be a string", line);
        }
        ann.text = text.get<std::string>();
      }
      item.annotations.push_back(std::move(ann));
    }
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<RawAnnotatedItem> load_decontext(const std::filesystem::path& path,
                                             const FieldMap& fields) {
  auto in = open_or_throw(path);
  return parse_decontext(in, fields);
}

json prepared_to_json(const PreparedItem& item) {
  std::vector<std::string> refs;
  for (const auto& r : item.references) refs.push_back(r.text());
  json j = {{"id", item.id},
            {"context", item.context.sentences},
            {"sentence", item.sentence.text()},
            {"human", item.human.text()},
            {"references", refs}};
  if (!item.context.speaker_labels.empty()) {
    j["speaker_labels"] = item.context.speaker_labels;
  }
  return j;
}

PreparedItem prepared_from_json(const json& j) {
  Context ctx;
  ctx.sentences = j.at("context").get<std::vector<std::string>>();
  if (j.contains("speaker_labels")) {
    ctx.speaker_labels = j.at("speaker_labels").get<std::vector<std::string>>();
  }
  std::vector<Sentence> refs;
  for (const auto& r : j.at("references")) {
    refs.emplace_back(r.get<std::string>());
  }
  return {as_id(j.at("id")), std::move(ctx),
          Sentence(j.at("sentence").get<std::string>()),
          Sentence(j.at("human").get<std::string>()), std::move(refs)};
}

std::vector<PreparedItem> parse_prepared(std::istream& in) {
  std::vector<PreparedItem> items;
  for_each_json_line(in, [&](const json& j, std::size_t) {
    items.push_back(prepared_from_json(j));
  });
  return items;
}

std::vector<PreparedItem> load_prepared(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_prepared(in);
}

std::optional<PreparedItem> subselect(const RawAnnotatedItem& item,
                                      int impossible_threshold) {
  const auto impossible = std::count_if(
      item.annotations.begin(), item.annotations.end(),
      [](const Annotation& a) { return a.impossible; });
  if (impossible >= impossible_threshold) return std::nullopt;

  std::vector<std::string> usable;
  for (const auto& a : item.annotations) {
    if (!a.impossible && a.text) usable.push_back(*a.text);
  }
  if (usable.size() < 2) return std::nullopt;
  std::stable_sort(usable.begin(), usable.end(),
                   [](const std::string& a, const std::string& b) {
                     return a.size() > b.size();
                   });
  const std::size_t median = usable.size() / 2;
  std::vector<Sentence> refs;
  for (std::size_t i = 0; i < usable.size(); ++i) {
    if (i != median) refs.emplace_back(usable[i]);
  }
  return PreparedItem{item.id, Context{item.context, {}},
                      Sentence(item.sentence), Sentence(usable[median]),
                      std::move(refs)};
}

// --- example derivation -----------------------------------------------------

std::vector<Hunk> align_words(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  // lcs[i][j]: LCS length of a[i..], b[j..]. count[i][j]: number of distinct
  // optimal match sets there, by inclusion-exclusion over "a[i] unused" and
  // "b[j] unused". Doubles stay exact far past the sentence lengths we see.
  std::vector<std::vector<std::size_t>> lcs(n + 1,
                                            std::vector<std::size_t>(m + 1, 0));
  std::vector<std::vector<double>> count(n + 1, std::vector<double>(m + 1, 1));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      const std::size_t take = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : 0;
      const std::size_t best =
          std::max({take, lcs[i + 1][j], lcs[i][j + 1]});
      lcs[i][j] = best;
      double c = 0;
      if (a[i] == b[j] && take == best) c += count[i + 1][j + 1];
      if (lcs[i + 1][j] == best) c += count[i + 1][j];
      if (lcs[i][j + 1] == best) c += count[i][j + 1];
      if (lcs[i + 1][j + 1] == best) c -= count[i + 1][j + 1];
      count[i][j] = c;
    }
  }
  if (count[0][0] > 1.5) {
    throw AmbiguousDiff("alignment of \"" + join(a, " ") + "\" and \"" +
                        join(b, " ") + "\" is not unique");
  }

  std::vector<Hunk> hunks;
  std::size_t i = 0;
  std::size_t j = 0;
  Hunk open{0, 0, 0, 0};
  bool in_hunk = false;
  auto close = [&] {
    if (in_hunk) {
      open.src_end = i;
      open.tgt_end = j;
      hunks.push_back(open);
      in_hunk = false;
    }
  };
  auto start = [&] {
    if (!in_hunk) {
      open = {i, i, j, j};
      in_hunk = true;
    }
  };
  while (i < n || j < m) {
    if (i < n && j < m && a[i] == b[j] && lcs[i][j] == lcs[i + 1][j + 1] + 1) {
      close();
      ++i;
      ++j;
    } else if (i < n && lcs[i + 1][j] == lcs[i][j]) {
      start();
      ++i;
    } else {
      start();
      ++j;
    }
  }
  close();
  return hunks;
}

namespace {

bool is_pronoun(std::string word) {
  static const std::vector<std::string> kPronouns = {
      "i",   "you",  "he",   "she",  "it",    "we",     "they",  "him",
      "her", "us",   "them", "his",  "its",   "their",  "our",   "my",
      "this", "that", "these", "those", "there", "here"};
  std::transform(word.begin(), word.end(), word.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return std::find(kPronouns.begin(), kPronouns.end(), word) != kPronouns.end();
}

}  // namespace

EditType classify_hunk(const Hunk& hunk,
                       const std::vector<std::string>& source) {
  if (hunk.insertion()) return EditType::kAdd;
  if (hunk.deletion()) return EditType::kDel;
  for (std::size_t k = hunk.src_begin; k < hunk.src_end; ++k) {
    const std::string& w = source[k];
    if (!std::isupper(static_cast<unsigned char>(w.front())) || is_pronoun(w)) {
      return EditType::kNp;
    }
  }
  return EditType::kName;
}

std::string fill_brackets(const BracketedSentence& bracketed,
                          const std::vector<std::string>& fills) {
  std::string out;
  std::size_t next = 0;
  bool inside = false;
  for (char c : bracketed.text()) {
    if (c == '[') {
      inside = true;
      if (next >= fills.size()) throw Error("not enough fills for brackets");
      out += ' ';
      out += fills[next++];
      out += ' ';
    } else if (c == ']') {
      inside = false;
    } else if (!inside) {
      out.push_back(c);
    }
  }
  if (next != fills.size()) throw Error("more fills than brackets");
  return normalize_whitespace(out);
}

std::vector<DerivedExample> derive_examples(const Context& context,
                                            const Sentence& source,
                                            const Sentence& edited) {
  const auto src = split_words(source.text());
  const auto tgt = split_words(edited.text());
  std::vector<DerivedExample> out;
  if (src == tgt) {
    for (EditType type : kDefaultNodeOrder) {
      const Sentence plain(join(src, " "));
      out.push_back({Example{type, context, BracketedSentence(plain.text()),
                             plain, Polarity::kNegative},
                     {}});
    }
    return out;
  }
  const std::vector<Hunk> hunks = align_words(src, tgt);
  for (EditType type : kDefaultNodeOrder) {
    std::vector<std::string> bracketed_words;
    std::vector<std::string> edited_words;
    std::vector<std::string> fills;
    std::size_t pos = 0;
    for (const Hunk& h : hunks) {
      for (; pos < h.src_begin; ++pos) {
        bracketed_words.push_back(src[pos]);
        edited_words.push_back(src[pos]);
      }
      const std::vector<std::string> old_words(src.begin() + h.src_begin,
                                               src.begin() + h.src_end);
      const std::vector<std::string> new_words(tgt.begin() + h.tgt_begin,
                                               tgt.begin() + h.tgt_end);
      if (classify_hunk(h, src) == type) {
        bracketed_words.push_back("[" + join(old_words, " ") + "]");
        edited_words.insert(edited_words.end(), new_words.begin(),
                            new_words.end());
        fills.push_back(join(new_words, " "));
      } else {
        bracketed_words.insert(bracketed_words.end(), old_words.begin(),
                               old_words.end());
        edited_words.insert(edited_words.end(), old_words.begin(),
                            old_words.end());
      }
      pos = h.src_end;
    }
    if (fills.empty()) continue;
    for (; pos < src.size(); ++pos) {
      bracketed_words.push_back(src[pos]);
      edited_words.push_back(src[pos]);
    }
    out.push_back({Example{type, context,
                           BracketedSentence(join(bracketed_words, " ")),
                           Sentence(join(edited_words, " ")),
                           Polarity::kPositive},
                   std::move(fills)});
  }
  return out;
}

PoolBuild build_example_pool(const std::vector<PreparedItem>& prepared) {
  PoolBuild result;
  std::map<EditType, std::vector<Example>> candidates;
  for (const auto& item : prepared) {
    try {
      for (auto& d : derive_examples(item.context, item.sentence, item.human)) {
        candidates[d.example.edit_type].push_back(std::move(d.example));
      }
    } catch (const AmbiguousDiff& e) {
      result.warnings.push_back("item " + item.id + " skipped: " + e.what());
    } catch (const InvalidSentence& e) {
      result.warnings.push_back("item " + item.id + " skipped: " + e.what());
    }
  }
  for (auto& [type, examples] : candidates) {
    result.pools[type] = filter_example_pool(examples);
  }
  return result;
}

// --- conversations ----------------------------------------------------------

std::vector<Conversation> parse_conversations(std::istream& in) {
  std::vector<Conversation> convs;
  for_each_json_line(in, [&](const json& j, std::size_t line) {
    Conversation c;
    c.id = as_id(require(j, "conversation_id", line));
    for (const json& t : require(j, "turns", line)) {
      c.turns.push_back({require(t, "speaker", line).get<std::string>(),
                         require(t, "text", line).get<std::string>()});
    }
    convs.push_back(std::move(c));
  });
  return convs;
}

std::vector<Conversation> load_conversations(
    const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_conversations(in);
}

std::string render_turns(const std::vector<Turn>& turns) {
  std::string out;
  for (const auto& t : turns) {
    out += t.speaker + ": " + t.text + "\n";
  }
  return out;
}

std::vector<std::vector<Turn>> chunk_turns(const std::vector<Turn>& turns,
                                           std::size_t max_chars) {
  std::vector<std::vector<Turn>> chunks;
  std::vector<Turn> current;
  std::size_t size = 0;
  for (const auto& t : turns) {
    const std::size_t len = t.speaker.size() + t.text.size() + 3;
    if (!current.empty() && size + len > max_chars) {
      chunks.push_back(std::move(current));
      current.clear();
      size = 0;
    }
    current.push_back(t);
    size += len;
  }
  if (!current.empty()) chunks.push_back(std::move(current));
  return chunks;
}

std::vector<Turn> parse_turns(std::string_view text) {
  static const std::regex kLabelled(R"(^\s*([^:\n]{1,24}?)\s*:\s*(.*)$)");
  std::vector<Turn> turns;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string line(text.substr(start, end - start));
    start = end + 1;
    if (trim(line).empty()) continue;
    std::smatch m;
    if (std::regex_match(line, m, kLabelled)) {
      turns.push_back({m[1].str(), trim(m[2].str())});
    } else if (!turns.empty()) {
      turns.back().text = trim(turns.back().text + " " + line);
    }
  }
  std::erase_if(turns, [](const Turn& t) { return t.text.empty(); });
  return turns;
}

std::vector<Turn> rule_based_clean(const std::vector<Turn>& turns) {
  static const std::regex kAngle(R"(<[^>]*>)");
  static const std::regex kBraceWord(R"(\{[A-Za-z]+\})");
  static const std::regex kBraceCode(R"(\{[A-Z]\s)");
  static const std::regex kMarks(R"([\[\]\{\}\+/#]|\(\(|\)\)|--)");
  std::vector<Turn> out;
  for (const auto& t : turns) {
    std::string s = std::regex_replace(t.text, kAngle, " ");
    s = std::regex_replace(s, kBraceWord, " ");
    s = std::regex_replace(s, kBraceCode, " ");
    s = std::regex_replace(s, kMarks, " ");
    s = trim(s);
    if (word_count(s) < 2) continue;
    out.push_back({t.speaker, s});
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    current.push_back(text[i]);
    const char c = text[i];
    const bool terminal = c == '.' || c == '!' || c == '?';
    const bool boundary =
        i + 1 == text.size() ||
        std::isspace(static_cast<unsigned char>(text[i + 1]));
    if (terminal && boundary) {
      if (!trim(current).empty()) out.push_back(trim(current));
      current.clear();
    }
  }
  if (!trim(current).empty()) out.push_back(trim(current));
  return out;
}

CleanResult clean_conversation(const std::vector<Turn>& turns, Gateway& gateway,
                               const GenerationConfig& generation,
                               const CleanOptions& options) {
  CleanResult result;
  const auto max_chars = static_cast<std::size_t>(
      static_cast<double>(options.token_budget) * options.chars_per_token);
  const auto chunks = chunk_turns(turns, max_chars);
  result.chunk_count = chunks.size();
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const std::string rendered = render_turns(chunks[c]);
    PromptSpec prompt;
    prompt.system_instruction = std::string(kCleaningPrompt);
    prompt.final_input = rendered;
    prompt.tag = {"", "clean", rendered, 0};
    std::vector<Turn> cleaned;
    try {
      cleaned = parse_turns(gateway.complete(prompt, generation));
      if (cleaned.empty()) {
        result.warnings.push_back("chunk " + std::to_string(c) +
                                  ": no turns in cleaned output, using rules");
        cleaned = rule_based_clean(chunks[c]);
      }
    } catch (const TransportError& e) {
      result.warnings.push_back("chunk " + std::to_string(c) + ": " + e.what() +
                                ", using rules");
      cleaned = rule_based_clean(chunks[c]);
    }
    for (auto& t : cleaned) {
      result.turns.push_back({t.speaker, t.text, split_sentences(t.text)});
    }
  }
  return result;
}

json window_to_json(const ConversationWindow& w) {
  json j = {{"id", w.id},
            {"conversation_id", w.conversation_id},
            {"context", w.context.sentences},
            {"speaker_labels", w.context.speaker_labels},
            {"speaker", w.speaker},
            {"sentence", w.sentence}};
  j["quality"] = w.quality ? json(*w.quality) : json(nullptr);
  return j;
}

std::vector<ConversationWindow> window_contexts(
    const std::string& conversation_id, const std::vector<CleanedTurn>& turns) {
  struct Unit {
    std::size_t turn;
    const std::string* text;
  };
  std::vector<Unit> units;
  for (std::size_t t = 0; t < turns.size(); ++t) {
    for (const auto& s : turns[t].sentences) units.push_back({t, &s});
  }

  std::vector<ConversationWindow> windows;
  for (std::size_t p = 0; p < units.size(); ++p) {
    const std::size_t first = p + 1 >= kWindowSize ? p + 1 - kWindowSize : 0;
    // Preceding window sentences grouped by turn, oldest first.
    std::vector<std::pair<std::size_t, std::vector<std::string>>> groups;
    for (std::size_t q = first; q < p; ++q) {
      if (groups.empty() || groups.back().first != units[q].turn) {
        groups.push_back({units[q].turn, {}});
      }
      groups.back().second.push_back(*units[q].text);
    }
    const bool other_turn = std::any_of(
        groups.begin(), groups.end(),
        [&](const auto& g) { return g.first != units[p].turn; });
    if (!other_turn || word_count(*units[p].text) < kMinSentenceWords) continue;

    ConversationWindow w;
    w.conversation_id = conversation_id;
    w.id = conversation_id + "-" + std::to_string(p);
    const std::size_t keep_from =
        groups.size() > kMaxContextTurns ? groups.size() - kMaxContextTurns : 0;
    for (std::size_t g = keep_from; g < groups.size(); ++g) {
      w.context.sentences.push_back(join(groups[g].second, " "));
      w.context.speaker_labels.push_back(turns[groups[g].first].speaker);
    }
    w.speaker = turns[units[p].turn].speaker;
    w.sentence = *units[p].text;
    windows.push_back(std::move(w));
  }
  return windows;
}

QualityResult quality_filter(const std::vector<ConversationWindow>& windows,
                             Gateway& gateway,
                             const GenerationConfig& generation, int min_rating,
                             int retries) {
  QualityResult result;
  for (const auto& w : windows) {
    PromptSpec prompt;
    prompt.system_instruction = std::string(kRatingPrompt);
    prompt.final_input =
        render_contexted_input(w.context, w.speaker + ": " + w.sentence);
    prompt.tag = {"", "rating", w.sentence, 0};
    std::optional<int> rating;
    for (int attempt = 0; attempt <= retries && !rating; ++attempt) {
      prompt.tag.attempt = attempt;
      try {
        rating = parse_rating(gateway.complete(prompt, generation));
      } catch (const UnparseableRating&) {
      }
    }
    if (!rating) {
      result.warnings.push_back("window " + w.id +
                                ": no parseable rating, dropped");
      continue;
    }
    if (*rating < min_rating) continue;
    ConversationWindow kept = w;
    kept.quality = rating;
    result.kept.push_back(std::move(kept));
  }
  return result;
}

}  // namespace decontext
