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

#include "decontext/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "decontext/datasets.hpp"
#include "decontext/errors.hpp"
#include "decontext/metrics.hpp"
#include "decontext/pipeline.hpp"

namespace decontext {

using nlohmann::json;

CliEnvironment CliEnvironment::Process() {
  CliEnvironment env;
  env.out = &std::cout;
  env.err = &std::cerr;
  env.transport = [] { return make_https_transport(); };
  env.getenv = [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
  return env;
}

namespace {

// Raised inside a command to leave with a specific exit code.
struct CommandFailure {
  int code;
  std::string message;
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandFailure{kExitInput, "cannot open " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CommandFailure{kExitInput, "cannot write " + path};
  return out;
}

struct BackendOptions {
  std::string kind = "mock";
  std::string mock_script;
  std::string model = "gpt-3.5-turbo";
  double temperature = 1.0;
  double top_p = 1.0;
  int transport_retries = 3;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--backend", o.kind, "live | mock | cached")
      ->check(CLI::IsMember({"live", "mock", "cached"}));
  cmd->add_option("--mock-script", o.mock_script,
                  "JSON-lines mock script (mock backend)");
  cmd->add_option("--model", o.model, "chat model name");
  cmd->add_option("--temperature", o.temperature);
  cmd->add_option("--top-p", o.top_p);
  cmd->add_option("--transport-retries", o.transport_retries);
}

GenerationConfig generation_config(const BackendOptions& o) {
  GenerationConfig g;
  g.model_name = o.model;
  g.temperature = o.temperature;
  g.top_p = o.top_p;
  g.max_retries_transport = o.transport_retries;
  return g;
}

std::unique_ptr<Backend> make_backend(const BackendOptions& o,
                                      CliEnvironment& env) {
  if (o.kind == "mock") {
    if (o.mock_script.empty()) {
      throw CommandFailure{kExitInput, "--mock-script is required for mock"};
    }
    MockScript script;
    try {
      script = MockScript::Load(o.mock_script);
    } catch (const ParseError& e) {
      throw CommandFailure{kExitInput, e.what()};
    }
    return std::make_unique<MockBackend>(std::move(script),
                                         env.transport ? env.transport() : nullptr);
  }
  LiveSettings settings;
  settings.url = env.getenv("DECONTEXT_API_URL").value_or(
      "https://api.openai.com/v1/chat/completions");
  const auto key = env.getenv("DECONTEXT_API_KEY");
  if (!key || key->empty()) {
    throw CommandFailure{kExitBackend, "DECONTEXT_API_KEY is not set"};
  }
  settings.api_key = *key;
  auto live = std::make_unique<LiveBackend>(std::move(settings), env.transport());
  if (o.kind == "live") return live;
  const std::filesystem::path dir =
      env.getenv("DECONTEXT_CACHE_DIR").value_or(".decontext-cache");
  auto cache = std::make_shared<ResponseCache>(dir / "responses.jsonl");
  return std::make_unique<CachedBackend>(std::move(live), std::move(cache));
}

json counters_json(const Gateway& gateway) {
  const GatewayCounters c = gateway.counters();
  return {{"calls", c.calls},
          {"network_requests", c.network_requests},
          {"cache_hits", c.cache_hits},
          {"cache_misses", c.cache_misses}};
}

// --- prepare-decontext ------------------------------------------------------

struct PrepareDecontextOptions {
  std::string input, output, examples_out, split = "test", field_map;
  int impossible_threshold = kDefaultImpossibleThreshold;
};

int cmd_prepare_decontext(const PrepareDecontextOptions& o,
                          CliEnvironment& env) {
  std::vector<RawAnnotatedItem> raw;
  try {
    const FieldMap fields =
        o.field_map.empty() ? FieldMap{} : FieldMap::Load(o.field_map);
    raw = load_decontext(o.input, fields);
  } catch (const ParseError& e) {
    throw CommandFailure{kExitInput, o.input + ": " + e.what()};
  }
  std::vector<PreparedItem> prepared;
  for (const auto& item : raw) {
    try {
      if (auto p = subselect(item, o.impossible_threshold)) {
        prepared.push_back(std::move(*p));
      }
    } catch (const InvalidSentence& e) {
      throw CommandFailure{kExitInput, "item " + item.id + ": " + e.what()};
    }
  }
  if (prepared.empty()) {
    *env.err << "warning: no items survived subselection (" << raw.size()
             << " read)\n";
  }
  {
    auto out = open_output(o.output);
    for (const auto& p : prepared) out << prepared_to_json(p).dump() << '\n';
  }
  if (!o.examples_out.empty()) {
    if (o.split != "dev") {
      *env.err << "warning: example pools are only built for --split dev\n";
    } else {
      PoolBuild pools = build_example_pool(prepared);
      for (const auto& w : pools.warnings) *env.err << "warning: " << w << '\n';
      auto out = open_output(o.examples_out);
      for (const auto& [type, examples] : pools.pools) {
        for (const auto& e : examples) out << example_to_json(e).dump() << '\n';
      }
    }
  }
  *env.err << "prepared " << prepared.size() << " of " << raw.size()
           << " items\n";
  return kExitOk;
}

// --- prepare-switchboard ----------------------------------------------------

struct PrepareSwitchboardOptions {
  std::string input, output;
  int min_rating = 3;
  int retries = 2;
  std::size_t token_budget = 3000;
  BackendOptions backend;
};

int cmd_prepare_switchboard(const PrepareSwitchboardOptions& o,
                            CliEnvironment& env) {
  std::vector<Conversation> convs;
  try {
    convs = load_conversations(o.input);
  } catch (const ParseError& e) {
    throw CommandFailure{kExitInput, o.input + ": " + e.what()};
  }
  Gateway gateway(make_backend(o.backend, env));
  const GenerationConfig gen = generation_config(o.backend);
  CleanOptions clean;
  clean.token_budget = o.token_budget;

  auto out = open_output(o.output);
  std::size_t kept = 0;
  try {
    for (const auto& conv : convs) {
      CleanResult cleaned = clean_conversation(conv.turns, gateway, gen, clean);
      for (const auto& w : cleaned.warnings) {
        *env.err << "warning: " << conv.id << ": " << w << '\n';
      }
      auto windows = window_contexts(conv.id, cleaned.turns);
      QualityResult rated =
          quality_filter(windows, gateway, gen, o.min_rating, o.retries);
      for (const auto& w : rated.warnings) *env.err << "warning: " << w << '\n';
      for (const auto& w : rated.kept) {
        out << window_to_json(w).dump() << '\n';
        ++kept;
      }
    }
  } catch (const GatewayError& e) {
    throw CommandFailure{kExitBackend, e.what()};
  }
  *env.err << "kept " << kept << " windows from " << convs.size()
           << " conversations\n";
  return kExitOk;
}

// --- run ----------------------------------------------------------------------

struct RunOptions {
  std::string input, examples, output, trace_out, manifest_out, node_config;
  bool with_checks = true;
  int k = 20;
  std::uint64_t seed = 0;
  int retries = 2;
  double positive_ratio = 0.8;
  double cutoff_positive_ratio = 0.5;
  double jaccard_threshold = kDefaultJaccardThreshold;
  int jobs = 4;
  BackendOptions backend;
};

struct ItemOutcome {
  std::string output;
  std::optional<std::string> error;
  bool fatal = false;
  json trace;
};

int cmd_run(const RunOptions& o, CliEnvironment& env) {
  const std::string started = utc_now();
  std::vector<PreparedItem> items;
  ExamplePools pools;
  try {
    items = load_prepared(o.input);
    if (!o.examples.empty()) pools = load_example_pools(o.examples);
  } catch (const ParseError& e) {
    throw CommandFailure{kExitInput, e.what()};
  }

  PipelineConfig cfg;
  cfg.retries_per_substep = o.retries;
  cfg.k_examples = o.k;
  cfg.positive_ratio = o.positive_ratio;
  cfg.cutoff_positive_ratio = o.cutoff_positive_ratio;
  cfg.jaccard_threshold = o.jaccard_threshold;
  cfg.with_checks = o.with_checks;
  cfg.rng_seed = o.seed;
  cfg.generation = generation_config(o.backend);

  std::vector<EditNodeSpec> nodes;
  try {
    if (o.node_config.empty()) {
      nodes = default_nodes(pools, cfg);
    } else {
      nodes = nodes_from_config(json::parse(read_file(o.node_config)), pools,
                                cfg);
    }
  } catch (const InsufficientPool& e) {
    throw CommandFailure{kExitInput, std::string("example pool: ") + e.what()};
  } catch (const json::exception& e) {
    throw CommandFailure{kExitInput, std::string("node config: ") + e.what()};
  } catch (const Error& e) {
    throw CommandFailure{kExitInput, e.what()};
  }

  Gateway gateway(make_backend(o.backend, env));

  std::vector<ItemOutcome> outcomes(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      const PreparedItem& item = items[i];
      ItemOutcome& r = outcomes[i];
      try {
        DecontextResult res = decontextualize(
            {item.id, item.context, item.sentence}, nodes, cfg, gateway);
        r.output = res.output.text();
        r.trace = trace_to_json(res.trace);
      } catch (const GatewayError& e) {
        r.output = item.sentence.text();
        r.error = e.what();
        r.fatal = true;
      } catch (const Error& e) {
        r.output = item.sentence.text();
        r.error = e.what();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(o.jobs, static_cast<int>(items.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::size_t succeeded = 0;
  std::size_t fatal = 0;
  {
    auto out = open_output(o.output);
    for (std::size_t i = 0; i < items.size(); ++i) {
      json rec = {{"id", items[i].id}, {"output", outcomes[i].output}};
      if (outcomes[i].error) {
        rec["error"] = *outcomes[i].error;
        *env.err << "error: item " << items[i].id << ": " << *outcomes[i].error
                 << '\n';
        fatal += outcomes[i].fatal;
      } else {
        ++succeeded;
      }
      out << rec.dump() << '\n';
    }
  }
  if (!o.trace_out.empty()) {
    auto out = open_output(o.trace_out);
    for (std::size_t i = 0; i < items.size(); ++i) {
      out << json{{"id", items[i].id}, {"trace", outcomes[i].trace}}.dump()
          << '\n';
    }
  }

  const std::string manifest_path =
      o.manifest_out.empty() ? o.output + ".manifest.json" : o.manifest_out;
  json manifest = {
      {"command", "run"},
      {"config",
       {{"retries_per_substep", cfg.retries_per_substep},
        {"k_examples", cfg.k_examples},
        {"positive_ratio", cfg.positive_ratio},
        {"cutoff_positive_ratio", cfg.cutoff_positive_ratio},
        {"jaccard_threshold", cfg.jaccard_threshold},
        {"with_checks", cfg.with_checks},
        {"temperature", cfg.generation.temperature},
        {"top_p", cfg.generation.top_p},
        {"frequency_penalty", cfg.generation.frequency_penalty},
        {"presence_penalty", cfg.generation.presence_penalty},
        {"backend", o.backend.kind},
        {"jobs", jobs},
        {"node_config", o.node_config}}},
      {"rng_seed", cfg.rng_seed},
      {"model", cfg.generation.model_name},
      {"prompt_catalog_version", kPromptCatalogVersion},
      {"input_digest", sha256_hex(read_file(o.input))},
      {"examples_digest",
       o.examples.empty() ? json(nullptr) : json(sha256_hex(read_file(o.examples)))},
      {"started_at", started},
      {"finished_at", utc_now()},
      {"items", items.size()},
      {"succeeded", succeeded},
      {"counters", counters_json(gateway)},
  };
  open_output(manifest_path) << manifest.dump(2) << '\n';

  if (!items.empty() && succeeded == 0) {
    return fatal ? kExitBackend : kExitInput;
  }
  return kExitOk;
}

// --- eval ---------------------------------------------------------------------

struct EvalOptions {
  std::string predictions, gold, report = "both", output, stopwords, method;
  bool repeat = false;
  bool human = false;
};

int cmd_eval(const EvalOptions& o, CliEnvironment& env) {
  std::vector<PreparedItem> gold;
  try {
    gold = load_prepared(o.gold);
  } catch (const ParseError& e) {
    throw CommandFailure{kExitInput, o.gold + ": " + e.what()};
  }
  const StopwordSet stopwords =
      o.stopwords.empty() ? StopwordSet::Default() : StopwordSet::Load(o.stopwords);

  std::map<std::string, std::string> predicted;
  if (!o.repeat && !o.human) {
    if (o.predictions.empty()) {
      throw CommandFailure{kExitInput,
                           "--predictions is required without --repeat/--human"};
    }
    std::ifstream in(o.predictions);
    if (!in) throw CommandFailure{kExitInput, "cannot open " + o.predictions};
    std::map<std::string, bool> known;
    for (const auto& g : gold) known[g.id] = true;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (normalize_whitespace(line).empty()) continue;
      try {
        const json j = json::parse(line);
        const std::string id =
            j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
        if (!known.count(id)) {
          throw CommandFailure{kExitInput, "prediction id " + id +
                                               " is not in the gold file"};
        }
        predicted[id] = j.at("output").get<std::string>();
      } catch (const json::exception& e) {
        throw CommandFailure{kExitInput, o.predictions + ": line " +
                                             std::to_string(line_no) + ": " +
                                             e.what()};
      }
    }
  }

  std::vector<EvalItem> items;
  std::size_t missing = 0;
  for (const auto& g : gold) {
    if (g.references.empty()) continue;
    std::string output;
    if (o.repeat) {
      output = g.sentence.text();
    } else if (o.human) {
      output = g.human.text();
    } else {
      auto it = predicted.find(g.id);
      if (it == predicted.end()) {
        ++missing;
        continue;
      }
      output = it->second;
    }
    try {
      items.push_back({g.sentence, Sentence(output), g.references, g.human});
    } catch (const InvalidSentence& e) {
      throw CommandFailure{kExitInput, "item " + g.id + ": " + e.what()};
    }
  }
  if (missing) {
    *env.err << "warning: " << missing << " gold items have no prediction\n";
  }
  if (items.empty()) {
    throw CommandFailure{kExitInput, "no aligned items to evaluate"};
  }
  const CorpusReport report = corpus_report(items, stopwords);
  const std::string method =
      !o.method.empty() ? o.method : o.repeat ? "repeat" : o.human ? "human"
                                                                   : "system";
  std::ostringstream text;
  if (o.report == "json" || o.report == "both") {
    json j = report_to_json(report);
    j["method"] = method;
    text << j.dump(2) << '\n';
  }
  if (o.report == "table" || o.report == "both") {
    text << report_to_table(report, method);
  }
  if (o.output.empty()) {
    *env.out << text.str();
  } else {
    open_output(o.output) << text.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, CliEnvironment& env) {
  CLI::App app{"Few-shot sentence decontextualization toolkit"};
  app.set_config("--config", "", "key = value config file; flags override");
  app.require_subcommand(1);

  PrepareDecontextOptions pd;
  auto* prep = app.add_subcommand("prepare-decontext",
                                  "subselect an annotated corpus");
  prep->add_option("--input", pd.input)->required();
  prep->add_option("--output", pd.output)->required();
  prep->add_option("--examples-out", pd.examples_out);
  prep->add_option("--split", pd.split)->check(CLI::IsMember({"dev", "test"}));
  prep->add_option("--field-map", pd.field_map, "upstream field-name mapping");
  prep->add_option("--impossible-threshold", pd.impossible_threshold);

  PrepareSwitchboardOptions ps;
  auto* swb = app.add_subcommand("prepare-switchboard",
                                 "clean, window and rate conversations");
  swb->add_option("--input", ps.input)->required();
  swb->add_option("--output", ps.output)->required();
  swb->add_option("--min-rating", ps.min_rating);
  swb->add_option("--retries", ps.retries);
  swb->add_option("--token-budget", ps.token_budget);
  add_backend_options(swb, ps.backend);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "decontextualize prepared items");
  run->add_option("--input", ro.input)->required();
  run->add_option("--examples", ro.examples, "example pool JSON-lines");
  run->add_option("--output", ro.output)->required();
  run->add_option("--trace-out", ro.trace_out);
  run->add_option("--manifest-out", ro.manifest_out);
  run->add_option("--node-config", ro.node_config);
  run->add_flag("--with-checks,!--no-checks", ro.with_checks,
                "cutoff checks before DEL and ADD");
  run->add_option("--k", ro.k);
  run->add_option("--seed", ro.seed);
  run->add_option("--retries", ro.retries);
  run->add_option("--positive-ratio", ro.positive_ratio);
  run->add_option("--cutoff-positive-ratio", ro.cutoff_positive_ratio);
  run->add_option("--jaccard-threshold", ro.jaccard_threshold);
  run->add_option("--jobs", ro.jobs)->check(CLI::PositiveNumber);
  add_backend_options(run, ro.backend);

  EvalOptions eo;
  auto* ev = app.add_subcommand("eval", "score predictions against gold");
  ev->add_option("--predictions", eo.predictions);
  ev->add_option("--gold", eo.gold)->required();
  ev->add_option("--report", eo.report)
      ->check(CLI::IsMember({"json", "table", "both"}));
  ev->add_option("--output", eo.output);
  ev->add_option("--stopwords", eo.stopwords);
  ev->add_option("--method", eo.method, "row label for the table");
  ev->add_flag("--repeat", eo.repeat, "score the source sentence as output");
  ev->add_flag("--human", eo.human, "score the human annotation as output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, *env.out, *env.err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*prep) return cmd_prepare_decontext(pd, env);
    if (*swb) return cmd_prepare_switchboard(ps, env);
    if (*run) return cmd_run(ro, env);
    if (*ev) return cmd_eval(eo, env);
  } catch (const CommandFailure& f) {
    *env.err << "error: " << f.message << '\n';
    return f.code;
  } catch (const AuthError& e) {
    *env.err << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const Error& e) {
    *env.err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}

}  // namespace decontext
