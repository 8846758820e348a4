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
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "decontext/errors.hpp"
#include "decontext/pipeline.hpp"
#include "test_support.hpp"

namespace decontext {
namespace {

using namespace decontext::testing;

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.k_examples = 4;
  return cfg;
}

std::vector<EditNodeSpec> nodes(const PipelineConfig& cfg) {
  return default_nodes(synthetic_pools(20, 10), cfg);
}

ContextedSentence thrones_item() {
  return {"thrones", thrones_context(), Sentence(kThronesSentence)};
}

// NP brackets and replaces "he"; everything else declines to edit.
MockScript thrones_script() {
  MockScript script;
  script.add(echo_rule("bracket"));
  script.add(rule("NP", "bracket", std::string(kThronesSentence), {kThronesBracketed}));
  script.add(rule("NP", "replace", std::string(kThronesBracketed), {kThronesReplaced}));
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"False"}));
  return script;
}

MockScript garbage_script() {
  MockScript script;
  script.add(rule(std::nullopt, "bracket", std::nullopt,
                  {"completely different words", "[unbalanced", ""}));
  script.add(rule(std::nullopt, "replace", std::nullopt, {"zzz qqq"}));
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"maybe"}));
  return script;
}

TEST(Pipeline, ThronesEndToEnd) {
  const PipelineConfig cfg = small_config();
  Gateway gw = mock_gateway(thrones_script());
  const auto result = decontextualize(thrones_item(), nodes(cfg), cfg, gw);
  EXPECT_EQ(result.output.text(), kThronesOutput);

  ASSERT_EQ(result.trace.nodes.size(), 4u);
  const NodeTrace& np = result.trace.nodes[0];
  EXPECT_EQ(np.edit_type, EditType::kNp);
  ASSERT_EQ(np.bracket_attempts.size(), 1u);
  EXPECT_EQ(np.bracket_attempts[0].output, kThronesBracketed);
  EXPECT_TRUE(np.bracket_attempts[0].verdict.accepted);
  ASSERT_EQ(np.replace_attempts.size(), 1u);
  EXPECT_TRUE(np.replace_attempts[0].verdict.accepted);
  EXPECT_EQ(np.node_output, kThronesOutput);

  // Echoed brackets mean no spans, so later nodes make one call each and
  // the checked nodes add one cutoff call.
  EXPECT_EQ(result.trace.nodes[1].gateway_calls(), 1u);
  EXPECT_EQ(result.trace.nodes[2].gateway_calls(), 2u);
  EXPECT_EQ(result.trace.nodes[2].cutoff_result, std::optional<bool>(false));
  EXPECT_EQ(result.trace.gateway_calls(), gw.counters().calls);
}

TEST(Pipeline, GarbageFallsBackAfterRetries) {
  const PipelineConfig cfg = small_config();
  Gateway gw = mock_gateway(garbage_script());
  const auto result = decontextualize(thrones_item(), nodes(cfg), cfg, gw);
  EXPECT_EQ(result.output.text(), kThronesSentence);
  for (const auto& n : result.trace.nodes) {
    EXPECT_FALSE(n.skipped);
    EXPECT_EQ(n.bracket_attempts.size(), 3u);
    EXPECT_TRUE(n.replace_attempts.empty());
    for (const auto& a : n.bracket_attempts) EXPECT_FALSE(a.verdict.accepted);
  }
  EXPECT_EQ(result.trace.nodes[0].bracket_attempts[0].verdict.reason,
            VerdictReason::kBracketMismatch);
  EXPECT_EQ(result.trace.nodes[0].bracket_attempts[1].verdict.reason,
            VerdictReason::kUnbalanced);
  EXPECT_EQ(result.trace.nodes[0].bracket_attempts[2].verdict.reason,
            VerdictReason::kEmptyOutput);
  // "maybe" three times reads as "continue".
  EXPECT_EQ(result.trace.nodes[2].cutoff_attempts.size(), 3u);
  EXPECT_EQ(result.trace.nodes[2].cutoff_result, std::optional<bool>(false));
}

TEST(Pipeline, BadReplacementKeepsInput) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(rule(std::nullopt, "bracket", std::nullopt, {kThronesBracketed}));
  script.add(rule(std::nullopt, "replace", std::nullopt, {"nothing alike"}));
  Gateway gw = mock_gateway(std::move(script));
  EditNodeSpec node = nodes(cfg)[0];
  const auto r = run_edit_node(node, thrones_context(), Sentence(kThronesSentence), cfg, gw);
  EXPECT_EQ(r.output.text(), kThronesSentence);
  EXPECT_EQ(r.trace.replace_attempts.size(), 3u);
  EXPECT_EQ(r.trace.replace_attempts[0].verdict.reason,
            VerdictReason::kJaccardBelowThreshold);
}

TEST(Pipeline, ZeroBracketsSkipsReplace) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(echo_rule("bracket"));
  Gateway gw = mock_gateway(std::move(script));
  const auto r =
      run_edit_node(nodes(cfg)[0], thrones_context(), Sentence(kThronesSentence), cfg, gw);
  EXPECT_EQ(r.output.text(), kThronesSentence);
  EXPECT_EQ(gw.counters().calls, 1u);
  EXPECT_TRUE(r.trace.replace_attempts.empty());
}

TEST(Pipeline, SecondAttemptCanSucceed) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(rule("NP", "bracket", std::nullopt, {"garbage", kThronesBracketed}));
  script.add(rule("NP", "replace", std::nullopt, {kThronesReplaced}));
  Gateway gw = mock_gateway(std::move(script));
  const auto r =
      run_edit_node(nodes(cfg)[0], thrones_context(), Sentence(kThronesSentence), cfg, gw);
  EXPECT_EQ(r.output.text(), kThronesOutput);
  EXPECT_EQ(r.trace.bracket_attempts.size(), 2u);
}

TEST(Pipeline, EmptyAddSpanAccepted) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(rule("ADD", "bracket", std::nullopt, {"Cosey won [] ."}));
  script.add(rule("ADD", "replace", std::nullopt, {"Cosey won the race ."}));
  Gateway gw = mock_gateway(std::move(script));
  const auto r = run_edit_node(nodes(cfg)[3], Context{{"The race."}, {}},
                               Sentence("Cosey won ."), cfg, gw);
  EXPECT_EQ(r.output.text(), "Cosey won the race .");
}

TEST(Cutoff, TrueSkipsRemainingNodes) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(echo_rule("bracket"));
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"True"}));
  Gateway gw = mock_gateway(std::move(script));
  const auto result = decontextualize(thrones_item(), nodes(cfg), cfg, gw);
  EXPECT_EQ(result.output.text(), kThronesSentence);
  EXPECT_FALSE(result.trace.nodes[0].skipped);
  EXPECT_FALSE(result.trace.nodes[1].skipped);
  EXPECT_TRUE(result.trace.nodes[2].skipped);
  EXPECT_TRUE(result.trace.nodes[3].skipped);
  EXPECT_EQ(result.trace.nodes[2].cutoff_result, std::optional<bool>(true));
  EXPECT_TRUE(result.trace.nodes[3].cutoff_attempts.empty());
  EXPECT_EQ(gw.counters().calls, 3u);
}

TEST(Cutoff, FalseProceeds) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"False"}));
  Gateway gw = mock_gateway(std::move(script));
  EXPECT_FALSE(run_cutoff_check(thrones_context(), Sentence("x"), {}, EditType::kDel,
                                cfg, gw));
}

TEST(Cutoff, RecoversAfterUnparseable) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"maybe", "True"}));
  Gateway gw = mock_gateway(std::move(script));
  std::vector<std::string> attempts;
  EXPECT_TRUE(run_cutoff_check(thrones_context(), Sentence("x"), {}, EditType::kDel,
                               cfg, gw, &attempts));
  EXPECT_EQ(attempts, (std::vector<std::string>{"maybe", "True"}));
}

TEST(Cutoff, ShortCircuitMatchesPrefix) {
  const PipelineConfig cfg = small_config();
  auto all = nodes(cfg);
  MockScript script;
  script.add(echo_rule("bracket"));
  script.add(rule("NP", "bracket", std::string(kThronesSentence), {kThronesBracketed}));
  script.add(rule("NP", "replace", std::string(kThronesBracketed), {kThronesReplaced}));
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"True"}));
  Gateway gw = mock_gateway(std::move(script));
  const auto full = decontextualize(thrones_item(), all, cfg, gw);

  std::vector<EditNodeSpec> prefix(all.begin(), all.begin() + 2);
  Gateway gw2 = mock_gateway(thrones_script());
  const auto pre = decontextualize(thrones_item(), prefix, cfg, gw2);
  EXPECT_EQ(full.output.text(), pre.output.text());
  EXPECT_EQ(full.output.text(), kThronesOutput);
}

TEST(Cutoff, NoChecksMeansNoCutoffPrompts) {
  PipelineConfig cfg = small_config();
  cfg.with_checks = false;
  MockScript script;
  script.add(echo_rule("bracket"));
  Gateway gw = mock_gateway(std::move(script));
  const auto all = nodes(cfg);
  for (const auto& n : all) EXPECT_FALSE(n.preceded_by_check);
  const auto result = decontextualize(thrones_item(), all, cfg, gw);
  EXPECT_EQ(gw.counters().calls, 4u);
  for (const auto& n : result.trace.nodes) EXPECT_FALSE(n.cutoff_result);
}

TEST(Pipeline, GatewayErrorsPropagate) {
  const PipelineConfig cfg = small_config();
  Gateway gw = mock_gateway(MockScript{});
  EXPECT_THROW(decontextualize(thrones_item(), nodes(cfg), cfg, gw), MockMiss);
  EXPECT_THROW(decontextualize(thrones_item(), {}, cfg, gw), Error);
}

TEST(Pipeline, TraceJson) {
  const PipelineConfig cfg = small_config();
  Gateway gw = mock_gateway(thrones_script());
  const auto result = decontextualize(thrones_item(), nodes(cfg), cfg, gw);
  const auto j = trace_to_json(result.trace);
  EXPECT_EQ(j.at("nodes").size(), 4u);
  EXPECT_EQ(j.at("nodes")[0].at("edit_type"), "NP");
  EXPECT_EQ(j.at("nodes")[0].at("bracket_attempts")[0].at("output"), kThronesBracketed);
  EXPECT_EQ(j.at("nodes")[0].at("replace_attempts")[0].at("reason"), "OK");
  EXPECT_TRUE(j.at("nodes")[0].at("cutoff_result").is_null());
  EXPECT_EQ(j.at("gateway_calls"), gw.counters().calls);
}

TEST(Prompts, SubstepRendering) {
  const PipelineConfig cfg = small_config();
  const auto all = nodes(cfg);

  const Example& ex = all[0].examples[0];
  const auto br = render_bracket_example(ex);
  EXPECT_EQ(br.first, strip_brackets(ex.bracketed).sentence.text());
  EXPECT_EQ(br.second, ex.bracketed.text());
  const auto rp = render_replace_example(ex);
  EXPECT_NE(rp.first.find("Sentence: " + ex.bracketed.text()), std::string::npos);
  EXPECT_EQ(rp.second, ex.edited.text());
  const auto neg = std::find_if(all[2].check_examples.begin(),
                                all[2].check_examples.end(), [](const Example& e) {
                                  return e.polarity == Polarity::kNegative;
                                });
  ASSERT_NE(neg, all[2].check_examples.end());
  EXPECT_EQ(render_cutoff_example(*neg).second, "True");
  EXPECT_EQ(render_cutoff_example(all[2].check_examples[0]).second, "False");
}

std::size_t count(const std::vector<Example>& v, Polarity p) {
  return std::count_if(v.begin(), v.end(),
                       [p](const Example& e) { return e.polarity == p; });
}

TEST(SelectExamples, Ratios) {
  const auto pool = synthetic_pool(EditType::kNp, 30, 30);
  const auto a = select_examples(pool, 20, 0.8, 1);
  EXPECT_EQ(count(a, Polarity::kPositive), 16u);
  EXPECT_EQ(count(a, Polarity::kNegative), 4u);
  const auto b = select_examples(pool, 20, 0.5, 1);
  EXPECT_EQ(count(b, Polarity::kPositive), 10u);
  EXPECT_EQ(count(b, Polarity::kNegative), 10u);
  const auto c = select_examples(pool, 1, 0.8, 1);
  EXPECT_EQ(count(c, Polarity::kPositive), 1u);
  EXPECT_EQ(c.size(), 1u);
  // 5 * 0.5 = 2.5 rounds up.
  EXPECT_EQ(count(select_examples(pool, 5, 0.5, 1), Polarity::kPositive), 3u);
}

TEST(SelectExamples, RoundRobinOrder) {
  const auto a = select_examples(synthetic_pool(EditType::kNp, 30, 30), 6, 0.5, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].polarity, i % 2 == 0 ? Polarity::kPositive : Polarity::kNegative);
  }
  const auto b = select_examples(synthetic_pool(EditType::kNp, 30, 30), 5, 0.8, 9);
  EXPECT_EQ(b[0].polarity, Polarity::kPositive);
  EXPECT_EQ(b[1].polarity, Polarity::kNegative);
  EXPECT_EQ(b[2].polarity, Polarity::kPositive);
  EXPECT_EQ(b[4].polarity, Polarity::kPositive);
}

TEST(SelectExamples, SeededAndWithoutReplacement) {
  const auto pool = synthetic_pool(EditType::kNp, 40, 40);
  const auto a = select_examples(pool, 20, 0.8, 123);
  const auto b = select_examples(pool, 20, 0.8, 123);
  const auto c = select_examples(pool, 20, 0.8, 124);
  std::vector<std::string> ta, tb, tc;
  for (const auto& e : a) ta.push_back(e.bracketed.text());
  for (const auto& e : b) tb.push_back(e.bracketed.text());
  for (const auto& e : c) tc.push_back(e.bracketed.text());
  EXPECT_EQ(ta, tb);
  EXPECT_NE(ta, tc);
  EXPECT_EQ(std::set<std::string>(ta.begin(), ta.end()).size(), ta.size());
}

TEST(SelectExamples, EngineIsThePortableOne) {
  // The selection relies on the standard-mandated mt19937_64 sequence.
  std::mt19937_64 rng;
  rng.discard(9999);
  EXPECT_EQ(rng(), 9981545732273789042ULL);
}

TEST(SelectExamples, InsufficientPoolNamesPolarity) {
  try {
    select_examples(synthetic_pool(EditType::kNp, 30, 3), 20, 0.8, 0);
    FAIL();
  } catch (const InsufficientPool& e) {
    EXPECT_NE(std::string(e.what()).find("negative"), std::string::npos);
  }
  try {
    select_examples(synthetic_pool(EditType::kNp, 5, 30), 20, 0.8, 0);
    FAIL();
  } catch (const InsufficientPool& e) {
    EXPECT_NE(std::string(e.what()).find("positive"), std::string::npos);
  }
  EXPECT_THROW(default_nodes(synthetic_pools(20, 5), PipelineConfig{}), InsufficientPool);
}

Example sized_example(std::size_t ctx_sentences, std::size_t target_words) {
  std::vector<std::string> words(target_words, "w");
  Context ctx;
  for (std::size_t i = 0; i < ctx_sentences; ++i) ctx.sentences.push_back("short one");
  const std::string s = join(words, " ");
  return {EditType::kNp, ctx, BracketedSentence(s), Sentence(s), Polarity::kNegative};
}

TEST(FilterExamplePool, Boundaries) {
  EXPECT_TRUE(filter_example_pool({sized_example(3, 5)}).empty());
  EXPECT_TRUE(filter_example_pool({sized_example(0, 5)}).empty());
  EXPECT_TRUE(filter_example_pool({sized_example(1, 30)}).empty());
  EXPECT_EQ(filter_example_pool({sized_example(2, 29)}).size(), 1u);
  EXPECT_EQ(filter_example_pool({sized_example(1, 1)}).size(), 1u);

  Example long_context = sized_example(1, 5);
  long_context.context.sentences[0] = join(std::vector<std::string>(30, "c"), " ");
  EXPECT_TRUE(filter_example_pool({long_context}).empty());
}

TEST(ExamplePools, JsonRoundTripAndErrors) {
  const auto pool = synthetic_pool(EditType::kDel, 2, 1);
  std::ostringstream out;
  for (const auto& e : pool) out << example_to_json(e).dump() << "\n";
  std::istringstream in(out.str());
  const ExamplePools pools = parse_example_pools(in);
  ASSERT_EQ(pools.at(EditType::kDel).size(), 3u);
  EXPECT_EQ(pools.at(EditType::kDel)[0].bracketed, pool[0].bracketed);
  EXPECT_EQ(pools.at(EditType::kDel)[2].polarity, Polarity::kNegative);

  nlohmann::json bad = example_to_json(pool[0]);
  bad["polarity"] = "negative";  // edited differs from the input
  std::istringstream bad_in(out.str() + bad.dump() + "\n");
  try {
    parse_example_pools(bad_in);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(NodeConfig, CustomNodes) {
  const PipelineConfig cfg = small_config();
  const nlohmann::json config = {
      {"nodes",
       {{{"edit_type", "NP"}, {"bracket_prompt", "custom bracket"}},
        {{"edit_type", "DEL"}, {"preceded_by_check", false}, {"pool", "NP"}}}}};
  const auto n = nodes_from_config(config, synthetic_pools(20, 10), cfg);
  ASSERT_EQ(n.size(), 2u);
  EXPECT_EQ(n[0].bracket_prompt, "custom bracket");
  EXPECT_EQ(n[0].replace_prompt, replace_prompt(EditType::kNp));
  EXPECT_FALSE(n[1].preceded_by_check);
  EXPECT_EQ(n[1].examples.size(), 4u);
  EXPECT_THROW(nodes_from_config({{"nodes", nlohmann::json::array()}},
                                 synthetic_pools(20, 10), cfg),
               Error);
}

TEST(PipelineConfig, Validation) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.retries_per_substep = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = PipelineConfig{};
  cfg.positive_ratio = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
}

// Adversarial backend: every response is drawn at random from a pool of
// valid, invalid and unparseable strings.
class RandomBackend final : public Backend {
 public:
  explicit RandomBackend(std::uint32_t seed) : rng_(seed) {}
  BackendKind kind() const override { return BackendKind::kMock; }
  std::string complete(const PromptSpec& p, const GenerationConfig&) override {
    const std::vector<std::string> options = {
        p.tag.sentence, "", "[", "]]", "True", "False", "maybe",
        "[" + p.tag.sentence + "]", "random words entirely", "[] " + p.tag.sentence,
        remove_delimiters(p.tag.sentence) + " extra"};
    return options[std::uniform_int_distribution<std::size_t>(
        0, options.size() - 1)(rng_)];
  }

 private:
  std::mt19937 rng_;
};

TEST(PipelineProperties, TotalityAndTraceCompleteness) {
  const PipelineConfig cfg = small_config();
  const auto all = nodes(cfg);
  const std::size_t per_substep = 1 + cfg.retries_per_substep;
  std::size_t checks = 0;
  for (const auto& n : all) checks += n.preceded_by_check ? per_substep : 0;
  const std::size_t bound = all.size() * 2 * per_substep + checks;
  for (std::uint32_t seed = 0; seed < 300; ++seed) {
    Gateway gw(std::make_unique<RandomBackend>(seed));
    const auto r = decontextualize(thrones_item(), all, cfg, gw);
    EXPECT_LE(gw.counters().calls, bound);
    EXPECT_EQ(r.trace.gateway_calls(), gw.counters().calls);
    EXPECT_FALSE(r.output.text().empty());
    EXPECT_EQ(r.output.text().find_first_of("[]"), std::string::npos);
  }
}

TEST(PipelineProperties, EchoIsIdentity) {
  const PipelineConfig cfg = small_config();
  MockScript script;
  script.add(echo_rule("bracket"));
  script.add(rule(std::nullopt, "cutoff", std::nullopt, {"False"}));
  Gateway gw = mock_gateway(std::move(script));
  for (const char* s : {"He left.", "It was released on October 3 , 2000",
                        kThronesSentence}) {
    const auto r = decontextualize({"x", thrones_context(), Sentence(s)}, nodes(cfg),
                                   cfg, gw);
    EXPECT_EQ(r.output.text(), s);
  }
}

}  // namespace
}  // namespace decontext
