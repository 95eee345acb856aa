// Copyright 2026 The harmkit Authors
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

// harmkit command-line entry point.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "harmkit/annotation.h"
#include "harmkit/clustering.h"
#include "harmkit/corpus.h"
#include "harmkit/evaluate.h"
#include "harmkit/evasion.h"
#include "harmkit/llmclient.h"
#include "harmkit/rulebase.h"
#include "harmkit/student.h"
#include "harmkit/synthgen.h"

namespace fs = std::filesystem;
using namespace harmkit;

namespace {

#ifndef HARMKIT_DATA_DIR
#define HARMKIT_DATA_DIR "data"
#endif

// Loaded config plus the directory its relative paths resolve against.
struct Config {
  Json json = Json::object();
  fs::path base = fs::current_path();

  template <typename T>
  T Get(const std::string& pointer, T fallback) const {
    const Json::json_pointer ptr(pointer);
    if (!json.contains(ptr) || json.at(ptr).is_null()) return fallback;
    try {
      return json.at(ptr).get<T>();
    } catch (const Json::exception&) {
      throw Error(ErrorCode::kConfig, "config value " + pointer + " has the wrong type");
    }
  }

  fs::path Path(const std::string& pointer, const fs::path& fallback) const {
    const Json::json_pointer ptr(pointer);
    if (!json.contains(ptr)) return fallback;
    fs::path p = Get<std::string>(pointer, "");
    return p.is_relative() ? base / p : p;
  }

  fs::path DataFile(const std::string& name) const {
    return Path("/paths/data_dir", fs::path(HARMKIT_DATA_DIR)) / name;
  }
};

Config LoadConfig(const std::string& path) {
  Config cfg;
  if (path.empty()) return cfg;
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::kConfig, "config file not found: " + path);
  cfg.json = ParseJsonFile(path);
  if (!cfg.json.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  cfg.base = fs::absolute(path).parent_path();
  return cfg;
}

template <typename T>
T Pick(const std::optional<T>& flag, const Config& cfg, const std::string& pointer, T fallback) {
  return flag ? *flag : cfg.Get<T>(pointer, fallback);
}

fs::path PickPath(const std::string& flag, const Config& cfg, const std::string& pointer,
                  const fs::path& fallback) {
  return flag.empty() ? cfg.Path(pointer, fallback) : fs::path(flag);
}

void RequireFile(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) {
    throw Error(ErrorCode::kConfig, std::string(what) + " not found: " + p.string(),
                Json{{"path", p.string()}});
  }
}

// Writes <output>.manifest.json with input and output hashes.
void WriteManifest(const fs::path& output, const std::string& command,
                   const std::vector<fs::path>& inputs, const Json& parameters,
                   std::optional<uint64_t> seed) {
  OrderedJson m;
  m["command"] = command;
  m["version"] = std::string(kVersion);
  OrderedJson in = OrderedJson::object();
  for (const auto& p : inputs) in[p.string()] = Sha256File(p);
  m["inputs"] = in;
  m["output"] = {{"path", output.string()}, {"sha256", Sha256File(output)}};
  m["seed"] = seed ? OrderedJson(*seed) : OrderedJson();
  m["parameters"] = parameters;
  WriteFile(output.string() + ".manifest.json", m.dump(2) + "\n");
}

std::shared_ptr<Transport> TransportFor(const Config& cfg, const Json& section) {
  if (section.contains("mock")) return MockFromScript(section["mock"]);
  if (section.contains("mock_script")) {
    fs::path p = section["mock_script"].get<std::string>();
    if (p.is_relative()) p = cfg.base / p;
    return MockFromScript(ParseJsonFile(p));
  }
  return MakeHttpTransport();
}

std::unique_ptr<LlmClient> MakeClient(const Config& cfg, const std::string& role, uint64_t seed) {
  const Json::json_pointer ptr("/providers/" + role);
  if (!cfg.json.contains(ptr)) {
    throw Error(ErrorCode::kConfig, "config has no providers." + role + " section");
  }
  const Json& section = cfg.json.at(ptr);
  ProviderConfig pc = ProviderConfigFromJson(section);
  const bool mock = section.contains("mock") || section.contains("mock_script");
  if (!mock && pc.endpoint.empty()) {
    throw Error(ErrorCode::kConfig, "providers." + role + ".endpoint is required");
  }
  if (pc.model.empty()) pc.model = mock ? "mock" : "";
  if (pc.model.empty()) throw Error(ErrorCode::kConfig, "providers." + role + ".model is required");
  return std::make_unique<LlmClient>(pc, TransportFor(cfg, section), SystemClock(), seed);
}

std::vector<Category> ParseCategories(const std::vector<std::string>& names) {
  if (names.empty()) return {kAllCategories.begin(), kAllCategories.end()};
  std::vector<Category> out;
  for (const auto& n : names) {
    auto c = ParseCategoryName(n);
    if (!c) throw Error(ErrorCode::kConfig, "unknown category: " + n);
    out.push_back(*c);
  }
  return out;
}

Corpus LoadCorpusStrict(const fs::path& path) {
  RequireFile(path, "corpus");
  auto result = IngestJsonl(path, path.stem().string());
  if (!result.errors.empty()) {
    const auto& e = result.errors.front();
    throw Error(ErrorCode::kValidation,
                path.string() + ":" + std::to_string(e.line) + ": " + e.message,
                Json{{"errors", result.errors.size()}});
  }
  return result.corpus;
}

std::vector<Candidate> LoadCandidates(const fs::path& path) {
  RequireFile(path, "candidate file");
  return ParseCandidates(ReadFile(path));
}

RuleBase LoadRules(const fs::path& path) {
  RequireFile(path, "rule base");
  return LoadRuleBase(path);
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kIo: return 2;
    case ErrorCode::kProvider: return 4;
    case ErrorCode::kShortfall: return 5;
    default: return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harmkit: Chinese harmful-content benchmark and detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config file");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Read JSONL samples into a validated corpus");
  std::vector<std::string> ingest_inputs;
  std::string ingest_source, ingest_out;
  ingest->add_option("-i,--input", ingest_inputs, "JSONL files")->required();
  ingest->add_option("--source", ingest_source, "Default source tag");
  ingest->add_option("-o,--out", ingest_out, "Output corpus JSONL")->required();

  // dedup
  auto* dedup = app.add_subcommand("dedup", "Drop exact duplicate texts within each category");
  std::string dedup_in, dedup_out;
  dedup->add_option("-i,--input", dedup_in)->required();
  dedup->add_option("-o,--out", dedup_out)->required();

  // embed
  auto* embed = app.add_subcommand("embed", "Embed corpus texts with the embedder provider");
  std::string embed_in, embed_out;
  std::optional<size_t> embed_batch;
  embed->add_option("-i,--input", embed_in)->required();
  embed->add_option("-o,--out", embed_out)->required();
  embed->add_option("--batch-size", embed_batch);

  // cluster
  auto* cluster = app.add_subcommand("cluster", "k-means over embeddings");
  std::string cluster_in, cluster_out, cluster_corpus;
  std::vector<std::string> cluster_categories;
  std::optional<size_t> cluster_k;
  std::optional<int> cluster_iter;
  std::optional<double> cluster_tol;
  std::optional<uint64_t> cluster_seed;
  cluster->add_option("-i,--embeddings", cluster_in)->required();
  cluster->add_option("-o,--out", cluster_out)->required();
  cluster->add_option("--corpus", cluster_corpus, "Restrict to ids of this corpus");
  cluster->add_option("--category", cluster_categories, "Restrict to these categories");
  cluster->add_option("--k", cluster_k);
  cluster->add_option("--max-iter", cluster_iter);
  cluster->add_option("--tol", cluster_tol);
  cluster->add_option("--seed", cluster_seed);

  // sample
  auto* sample = app.add_subcommand("sample", "Draw a fixed number of members per cluster");
  std::string sample_clusters, sample_corpus, sample_out;
  std::optional<size_t> sample_per;
  std::optional<uint64_t> sample_seed;
  sample->add_option("--clusters", sample_clusters)->required();
  sample->add_option("--corpus", sample_corpus)->required();
  sample->add_option("-o,--out", sample_out)->required();
  sample->add_option("--per-cluster", sample_per);
  sample->add_option("--seed", sample_seed);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP API");
  std::string serve_corpus, serve_session = "default", serve_rules, serve_log, serve_dir = ".",
                            serve_host = "127.0.0.1";
  int serve_port = 8080;
  serve->add_option("--corpus", serve_corpus, "Candidate pool JSONL")->required();
  serve->add_option("--session", serve_session);
  serve->add_option("--rules", serve_rules);
  serve->add_option("--log", serve_log, "Decision log (replayed if present)");
  serve->add_option("--out-dir", serve_dir);
  serve->add_option("--host", serve_host);
  serve->add_option("--port", serve_port);

  // rules
  auto* rules = app.add_subcommand("rules", "Inspect or edit the knowledge rule base");
  rules->require_subcommand(1);
  std::string rules_path;
  rules->add_option("--rules", rules_path, "Rule base JSON");
  auto* rules_list = rules->add_subcommand("list", "List rules");
  auto* rules_render = rules->add_subcommand("render", "Print the prompt rendering");
  std::vector<std::string> render_categories;
  rules_render->add_option("--category", render_categories);
  auto* rules_add = rules->add_subcommand("add", "Add a rule");
  std::string add_id, add_category, add_title, add_body, add_out;
  std::vector<std::string> add_hints;
  int add_ordinal = 0;
  rules_add->add_option("--id", add_id)->required();
  rules_add->add_option("--category", add_category)->required();
  rules_add->add_option("--body", add_body)->required();
  rules_add->add_option("--title", add_title);
  rules_add->add_option("--hint", add_hints);
  rules_add->add_option("--ordinal", add_ordinal);
  rules_add->add_option("-o,--out", add_out, "Defaults to overwriting --rules");

  // gen
  auto* gen = app.add_subcommand("gen", "Sample scenarios and generate teacher candidates");
  std::vector<std::string> gen_categories;
  std::optional<size_t> gen_n;
  std::optional<uint64_t> gen_seed;
  std::optional<double> gen_oversample;
  std::string gen_tables, gen_rules, gen_out;
  gen->add_option("--category", gen_categories);
  gen->add_option("--n", gen_n, "Target accepted instances per category");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--oversample", gen_oversample);
  gen->add_option("--tables-file", gen_tables);
  gen->add_option("--rules", gen_rules);
  gen->add_option("-o,--out", gen_out)->required();

  // filter
  auto* filter = app.add_subcommand("filter", "Refusal keyword filter plus duplicate removal");
  std::string filter_in, filter_out, filter_keywords;
  filter->add_option("-i,--input", filter_in)->required();
  filter->add_option("-o,--out", filter_out)->required();
  filter->add_option("--keywords-file", filter_keywords);

  // assemble
  auto* assemble = app.add_subcommand("assemble", "Balanced draw of n candidates per category");
  std::string assemble_in, assemble_out;
  std::optional<size_t> assemble_n;
  std::optional<uint64_t> assemble_seed;
  assemble->add_option("-i,--input", assemble_in)->required();
  assemble->add_option("-o,--out", assemble_out)->required();
  assemble->add_option("--n", assemble_n);
  assemble->add_option("--seed", assemble_seed);

  // export-sft
  auto* export_sft = app.add_subcommand("export-sft", "Write detection-prompt SFT records");
  std::string sft_in, sft_out, sft_rules;
  export_sft->add_option("-i,--input", sft_in)->required();
  export_sft->add_option("-o,--out", sft_out)->required();
  export_sft->add_option("--rules", sft_rules);

  // train-student
  auto* train = app.add_subcommand("train-student", "Train the n-gram student on SFT records");
  std::string train_sft, train_out;
  std::optional<int> train_epochs;
  std::optional<double> train_lr, train_l2;
  std::optional<size_t> train_batch;
  std::optional<uint64_t> train_seed;
  train->add_option("--sft", train_sft)->required();
  train->add_option("-o,--out", train_out)->required();
  train->add_option("--epochs", train_epochs);
  train->add_option("--lr", train_lr);
  train->add_option("--batch-size", train_batch);
  train->add_option("--l2", train_l2);
  train->add_option("--seed", train_seed);

  // predict
  auto* predict = app.add_subcommand("predict", "Classify one text with a trained student");
  std::string predict_model, predict_text, predict_rules;
  bool predict_raw = false;
  predict->add_option("--model", predict_model)->required();
  predict->add_option("--text", predict_text)->required();
  predict->add_option("--rules", predict_rules);
  predict->add_flag("--raw", predict_raw, "Classify the text as given, without the prompt");

  // perturb
  auto* perturb = app.add_subcommand("perturb", "Apply a local evasion perturbation");
  std::string perturb_text, perturb_strategy, perturb_lexicon, perturb_pinyin;
  uint64_t perturb_seed = 0;
  perturb->add_option("--text", perturb_text)->required();
  perturb->add_option("--strategy", perturb_strategy)->required();
  perturb->add_option("--lexicon", perturb_lexicon);
  perturb->add_option("--pinyin-table", perturb_pinyin);
  perturb->add_option("--seed", perturb_seed);

  // eval
  auto* eval = app.add_subcommand("eval", "Zero-shot evaluation with the evaluator provider");
  std::string eval_corpus, eval_rules, eval_out, eval_log;
  bool eval_no_knowledge = false;
  std::optional<uint64_t> eval_seed;
  eval->add_option("--corpus", eval_corpus)->required();
  eval->add_option("--rules", eval_rules);
  eval->add_option("-o,--out", eval_out, "Report JSON")->required();
  eval->add_option("--log", eval_log, "Per-sample log (default <out>.log.jsonl)");
  eval->add_flag("--no-knowledge", eval_no_knowledge);
  eval->add_option("--seed", eval_seed);

  // report
  auto* report = app.add_subcommand("report", "Rescore a per-sample evaluation log");
  std::string report_log, report_out, report_name = "model";
  report->add_option("--log", report_log)->required();
  report->add_option("-o,--out", report_out)->required();
  report->add_option("--name", report_name, "Row label for the table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << Json{{"code", "usage"}, {"message", e.what()}, {"detail", Json::object()}}.dump()
              << "\n"
              << app.help();
    return 2;
  }

  try {
    const Config cfg = LoadConfig(config_path);
    const uint64_t default_seed = cfg.Get<uint64_t>("/seed", 0);

    if (ingest->parsed()) {
      std::vector<Sample> all;
      std::vector<fs::path> inputs;
      size_t bad_lines = 0;
      for (const auto& in : ingest_inputs) {
        RequireFile(in, "input");
        inputs.emplace_back(in);
        auto r = IngestJsonl(in, ingest_source.empty() ? fs::path(in).stem().string() : ingest_source);
        for (const auto& e : r.errors) {
          std::cerr << Json{{"file", in}, {"line", e.line}, {"message", e.message}}.dump() << "\n";
        }
        bad_lines += r.errors.size();
        all.insert(all.end(), r.corpus.samples().begin(), r.corpus.samples().end());
      }
      Corpus corpus(fs::path(ingest_out).stem().string(), std::move(all));
      WriteJsonl(corpus, ingest_out);
      WriteManifest(ingest_out, "ingest", inputs,
                    {{"samples", corpus.size()}, {"skipped_lines", bad_lines}}, std::nullopt);
      std::cout << Json{{"samples", corpus.size()}, {"skipped_lines", bad_lines}}.dump() << "\n";
    } else if (dedup->parsed()) {
      Corpus corpus = LoadCorpusStrict(dedup_in);
      Corpus unique = Deduplicate(corpus);
      WriteJsonl(unique, dedup_out);
      WriteManifest(dedup_out, "dedup", {dedup_in},
                    {{"input", corpus.size()}, {"output", unique.size()}}, std::nullopt);
      std::cout << Json{{"input", corpus.size()}, {"output", unique.size()}}.dump() << "\n";
    } else if (embed->parsed()) {
      Corpus corpus = LoadCorpusStrict(embed_in);
      auto client = MakeClient(cfg, "embedder", default_seed);
      const size_t batch = Pick(embed_batch, cfg, "/embed/batch_size", size_t{64});
      if (batch == 0) throw Error(ErrorCode::kConfig, "batch size must be positive");
      EmbeddingSet set;
      for (size_t start = 0; start < corpus.size(); start += batch) {
        std::vector<std::string> texts;
        for (size_t i = start; i < std::min(corpus.size(), start + batch); ++i) {
          texts.push_back(corpus.samples()[i].text);
          set.ids.push_back(corpus.samples()[i].id);
        }
        EmbedResult r = client->Embed(texts);
        if (!r.ok()) {
          throw Error(ErrorCode::kProvider, "embedding failed: " + r.message,
                      Json{{"status", LlmStatusName(r.status)}, {"batch_start", start}});
        }
        for (auto& v : r.vectors) set.vectors.push_back(std::move(v));
      }
      set.dim = set.vectors.empty() ? 0 : set.vectors.front().size();
      WriteFile(embed_out, ExportEmbeddings(set));
      WriteManifest(embed_out, "embed", {embed_in},
                    {{"provider", ProviderConfigToJson(client->config())}, {"count", set.ids.size()}},
                    std::nullopt);
    } else if (cluster->parsed()) {
      RequireFile(cluster_in, "embeddings");
      EmbeddingSet set = LoadEmbeddings(cluster_in);
      std::vector<fs::path> inputs{cluster_in};
      if (!cluster_corpus.empty()) {
        Corpus corpus = LoadCorpusStrict(cluster_corpus);
        inputs.emplace_back(cluster_corpus);
        const auto cats = ParseCategories(cluster_categories);
        const std::set<Category> wanted(cats.begin(), cats.end());
        EmbeddingSet kept;
        kept.dim = set.dim;
        for (size_t i = 0; i < set.ids.size(); ++i) {
          const Sample* s = corpus.Find(set.ids[i]);
          if (s != nullptr && wanted.contains(s->label)) {
            kept.ids.push_back(set.ids[i]);
            kept.vectors.push_back(set.vectors[i]);
          }
        }
        set = std::move(kept);
      }
      KMeansOptions opt;
      opt.k = Pick(cluster_k, cfg, "/cluster/k", opt.k);
      opt.max_iter = Pick(cluster_iter, cfg, "/cluster/max_iter", opt.max_iter);
      opt.tol = Pick(cluster_tol, cfg, "/cluster/tol", opt.tol);
      opt.seed = Pick(cluster_seed, cfg, "/cluster/seed", default_seed);
      ClusterModel model = KMeans(set, opt);
      WriteFile(cluster_out, ClusterModelToJson(model).dump() + "\n");
      WriteManifest(cluster_out, "cluster", inputs,
                    {{"k", opt.k}, {"max_iter", opt.max_iter}, {"tol", opt.tol},
                     {"points", set.ids.size()}, {"inertia", model.inertia},
                     {"iterations", model.iterations_run}},
                    opt.seed);
    } else if (sample->parsed()) {
      RequireFile(sample_clusters, "cluster model");
      ClusterModel model = ClusterModelFromJson(ParseJsonFile(sample_clusters));
      Corpus corpus = LoadCorpusStrict(sample_corpus);
      const size_t per = Pick(sample_per, cfg, "/cluster/per_cluster", size_t{20});
      const uint64_t seed = Pick(sample_seed, cfg, "/cluster/sample_seed", default_seed);
      std::vector<Sample> picked;
      for (const auto& id : ClusterSample(model, per, seed)) {
        const Sample* s = corpus.Find(id);
        if (s == nullptr) {
          throw Error(ErrorCode::kValidation, "clustered id missing from corpus: " + id);
        }
        picked.push_back(*s);
      }
      Corpus out(corpus.name(), std::move(picked));
      WriteJsonl(out, sample_out);
      WriteManifest(sample_out, "sample", {sample_clusters, sample_corpus},
                    {{"per_cluster", per}, {"count", out.size()}}, seed);
      std::cout << Json{{"count", out.size()}}.dump() << "\n";
    } else if (serve->parsed()) {
      Corpus pool = LoadCorpusStrict(serve_corpus);
      const fs::path rules_file = PickPath(serve_rules, cfg, "/paths/rules", cfg.DataFile("rules.json"));
      AnnotationService service(LoadRules(rules_file));
      service.AddSession(serve_session, std::move(pool));
      fs::create_directories(serve_dir);
      const fs::path log_path = serve_log.empty() ? fs::path(serve_dir) / "decisions.jsonl"
                                                  : fs::path(serve_log);
      if (fs::exists(log_path)) {
        AnnotationService::Replay(service, AnnotationService::ParseLog(ReadFile(log_path)));
      }
      service.AttachLog(log_path);
      AnnotationApi api(service, serve_dir);
      std::cerr << "serving session " << serve_session << " on http://" << serve_host << ":"
                << serve_port << "\n";
      RunAnnotationServer(api, serve_host, serve_port);
    } else if (rules->parsed()) {
      const fs::path file = PickPath(rules_path, cfg, "/paths/rules", cfg.DataFile("rules.json"));
      RuleBase rb = LoadRules(file);
      if (rules_list->parsed()) {
        std::cout << "version " << rb.version() << "\n";
        for (Category c : kViolationCategories) {
          for (const Rule* r : rb.RulesFor(c)) {
            std::cout << r->id << "\t" << EnglishName(c) << "\t" << r->title << "\n";
          }
        }
      } else if (rules_render->parsed()) {
        const auto cats = ParseCategories(render_categories);
        std::cout << RenderRules(rb, std::set<Category>(cats.begin(), cats.end())) << "\n";
      } else if (rules_add->parsed()) {
        auto category = ParseCategoryName(add_category);
        if (!category) throw Error(ErrorCode::kValidation, "unknown category: " + add_category);
        Rule rule;
        rule.id = add_id;
        rule.category = *category;
        rule.ordinal = add_ordinal;
        rule.title = add_title;
        rule.body = add_body;
        rule.hint_terms = add_hints;
        RuleBase next = AddRule(rb, rule);
        const fs::path out = add_out.empty() ? file : fs::path(add_out);
        SaveRuleBase(next, out);
        WriteManifest(out, "rules add", add_out.empty() ? std::vector<fs::path>{} : std::vector<fs::path>{file},
                      {{"rule_id", add_id}, {"version", next.version()}}, std::nullopt);
        std::cout << Json{{"version", next.version()}}.dump() << "\n";
      }
    } else if (gen->parsed()) {
      const fs::path tables_file =
          PickPath(gen_tables, cfg, "/paths/tables", cfg.DataFile("attribute_tables.json"));
      const fs::path rules_file = PickPath(gen_rules, cfg, "/paths/rules", cfg.DataFile("rules.json"));
      RequireFile(tables_file, "attribute tables");
      const AttributeTables tables = LoadAttributeTables(tables_file);
      const RuleBase rb = LoadRules(rules_file);
      const size_t n = Pick(gen_n, cfg, "/gen/n", size_t{3000});
      const double factor = Pick(gen_oversample, cfg, "/gen/oversample", 1.3);
      const uint64_t seed = Pick(gen_seed, cfg, "/gen/seed", default_seed);
      const size_t count = OversampledCount(n, factor);
      std::vector<ScenarioSpec> specs;
      for (Category c : ParseCategories(gen_categories)) {
        auto part = SampleScenarios(c, count, tables, rb, seed);
        specs.insert(specs.end(), part.begin(), part.end());
      }
      auto client = MakeClient(cfg, "teacher", seed);
      GenConfig gc;
      gc.model = client->config().model;
      gc.temperature = cfg.Get<double>("/gen/temperature", gc.temperature);
      gc.top_k = cfg.Get<int>("/gen/top_k", *gc.top_k);
      gc.max_tokens = cfg.Get<int>("/gen/max_tokens", gc.max_tokens);
      auto cands = GenerateCandidates(specs, *client, gc);
      const size_t failed = static_cast<size_t>(std::count_if(
          cands.begin(), cands.end(),
          [](const Candidate& c) { return c.status == CandidateStatus::kFailed; }));
      WriteFile(gen_out, ExportCandidates(cands));
      WriteManifest(gen_out, "gen", {tables_file, rules_file},
                    {{"n", n}, {"oversample", factor}, {"per_category", count},
                     {"temperature", gc.temperature}, {"top_k", *gc.top_k},
                     {"provider", ProviderConfigToJson(client->config())},
                     {"candidates", cands.size()}, {"failed", failed}},
                    seed);
      std::cout << Json{{"candidates", cands.size()}, {"failed", failed}}.dump() << "\n";
      if (!cands.empty() && failed == cands.size()) {
        throw Error(ErrorCode::kProvider, "every generation request failed: " + cands.front().reason);
      }
    } else if (filter->parsed()) {
      const fs::path kw_file = PickPath(filter_keywords, cfg, "/paths/keywords",
                                        cfg.DataFile("refusal_keywords.json"));
      RequireFile(kw_file, "keyword file");
      const auto keywords = LoadKeywords(kw_file);
      auto cands = DedupCandidates(FilterRefusals(LoadCandidates(filter_in), keywords));
      std::map<std::string, size_t> counts;
      for (const auto& c : cands) ++counts[std::string(CandidateStatusName(c.status))];
      WriteFile(filter_out, ExportCandidates(cands));
      WriteManifest(filter_out, "filter", {filter_in, kw_file}, {{"counts", counts}}, std::nullopt);
      std::cout << Json(counts).dump() << "\n";
    } else if (assemble->parsed()) {
      const size_t n = Pick(assemble_n, cfg, "/gen/n", size_t{3000});
      const uint64_t seed = Pick(assemble_seed, cfg, "/gen/seed", default_seed);
      auto accepted = AssembleDataset(LoadCandidates(assemble_in), n, seed);
      WriteFile(assemble_out, ExportCandidates(accepted));
      WriteManifest(assemble_out, "assemble", {assemble_in},
                    {{"n", n}, {"accepted", accepted.size()}}, seed);
      std::cout << Json{{"accepted", accepted.size()}}.dump() << "\n";
    } else if (export_sft->parsed()) {
      const fs::path rules_file = PickPath(sft_rules, cfg, "/paths/rules", cfg.DataFile("rules.json"));
      const RuleBase rb = LoadRules(rules_file);
      const size_t count = ExportSft(LoadCandidates(sft_in), rb, sft_out);
      WriteManifest(sft_out, "export-sft", {sft_in, rules_file},
                    {{"records", count}, {"rulebase_version", rb.version()}}, std::nullopt);
      std::cout << Json{{"records", count}}.dump() << "\n";
    } else if (train->parsed()) {
      RequireFile(train_sft, "SFT file");
      const auto records = ParseSftRecords(ReadFile(train_sft));
      TrainHyper hyper;
      hyper.epochs = Pick(train_epochs, cfg, "/student/epochs", hyper.epochs);
      hyper.lr = Pick(train_lr, cfg, "/student/lr", hyper.lr);
      hyper.batch_size = Pick(train_batch, cfg, "/student/batch_size", hyper.batch_size);
      hyper.l2 = Pick(train_l2, cfg, "/student/l2", hyper.l2);
      hyper.seed = Pick(train_seed, cfg, "/student/seed", default_seed);
      LinearModel model = Train(records, FeatureExtractor{}, hyper);
      model.metadata["data_sha256"] = Sha256File(train_sft);
      SaveModel(model, train_out);
      WriteManifest(train_out, "train-student", {train_sft}, model.metadata["hyper"], hyper.seed);
      std::cout << Json{{"records", records.size()}, {"loss_trace", model.loss_trace}}.dump() << "\n";
    } else if (predict->parsed()) {
      RequireFile(predict_model, "model");
      const LinearModel model = LoadModel(predict_model);
      std::string input = predict_text;
      if (!predict_raw) {
        const fs::path rules_file =
            PickPath(predict_rules, cfg, "/paths/rules", cfg.DataFile("rules.json"));
        const RuleBase rb = LoadRules(rules_file);
        input = BuildDetectionPrompt(&rb, predict_text).text;
      }
      const auto p = Predict(model, input);
      Json probs = Json::object();
      for (Category c : kAllCategories) probs[std::string(EnglishName(c))] = p.probabilities[Index(c)];
      std::cout << Json{{"category", EnglishName(p.category)},
                        {"label", ChineseLabel(p.category)},
                        {"probabilities", probs}}
                       .dump()
                << "\n";
    } else if (perturb->parsed()) {
      auto strategy = ParseStrategy(perturb_strategy);
      if (!strategy) throw Error(ErrorCode::kConfig, "unknown strategy: " + perturb_strategy);
      const fs::path lex_file = PickPath(perturb_lexicon, cfg, "/paths/lexicon", cfg.DataFile("lexicon.json"));
      const fs::path py_file =
          PickPath(perturb_pinyin, cfg, "/paths/pinyin_table", cfg.DataFile("pinyin_table.json"));
      RequireFile(lex_file, "lexicon");
      SubstitutionLexicon lex = LoadLexicon(lex_file);
      if (fs::exists(py_file)) lex = AddPinyinFromTable(lex, LoadPinyinTable(py_file));
      const auto r = Perturb(perturb_text, *strategy, lex, perturb_seed);
      Json reps = Json::array();
      for (const auto& rep : r.replacements) {
        reps.push_back({{"begin", rep.begin}, {"end", rep.end}, {"output_begin", rep.output_begin},
                        {"original", rep.original}, {"replacement", rep.replacement}});
      }
      std::cout << Json{{"text", r.text}, {"replacements", reps}, {"skipped_terms", r.skipped_terms}}
                       .dump()
                << "\n";
    } else if (eval->parsed()) {
      Corpus corpus = LoadCorpusStrict(eval_corpus);
      const fs::path rules_file = PickPath(eval_rules, cfg, "/paths/rules", cfg.DataFile("rules.json"));
      const RuleBase rb = LoadRules(rules_file);
      EvalConfig ec;
      ec.with_knowledge = !eval_no_knowledge && cfg.Get<bool>("/eval/with_knowledge", true);
      ec.temperature = cfg.Get<double>("/eval/temperature", 0.0);
      ec.max_tokens = cfg.Get<int>("/eval/max_tokens", ec.max_tokens);
      ec.seed = Pick(eval_seed, cfg, "/eval/seed", default_seed);
      auto client = MakeClient(cfg, "evaluator", ec.seed);
      ec.model = client->config().model;
      EvalRun run = EvaluateModel(*client, corpus, ec.with_knowledge ? &rb : nullptr, ec);
      const fs::path log_path = eval_log.empty() ? fs::path(eval_out + ".log.jsonl") : fs::path(eval_log);
      WriteFile(log_path, ExportEvalLog(run.log));
      WriteFile(eval_out, EvalReportToJson(run.report).dump(2) + "\n");
      WriteManifest(eval_out, "eval", {eval_corpus, rules_file},
                    {{"provider", ProviderConfigToJson(client->config())},
                     {"with_knowledge", ec.with_knowledge},
                     {"temperature", ec.temperature},
                     {"log", log_path.string()},
                     {"log_sha256", Sha256File(log_path)}},
                    ec.seed);
      std::cout << RenderReportTable(run.report, ec.model) << "\n";
      if (run.report.evaluated == 0 && run.report.excluded > 0) {
        throw Error(ErrorCode::kProvider, "every evaluation request failed",
                    Json{{"excluded", run.report.excluded}});
      }
    } else if (report->parsed()) {
      RequireFile(report_log, "evaluation log");
      const auto log = ParseEvalLog(ReadFile(report_log));
      EvalConfig ec;
      ec.model = report_name;
      EvalReport r = ReportFromLog(log, ec, 0);
      WriteFile(report_out, EvalReportToJson(r).dump(2) + "\n");
      WriteManifest(report_out, "report", {report_log}, {{"name", report_name}}, std::nullopt);
      std::cout << RenderReportTable(r, report_name) << "\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << e.ToJson().dump() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << Json{{"code", "internal"}, {"message", e.what()}, {"detail", Json::object()}}.dump()
              << "\n";
    return 3;
  }
}
