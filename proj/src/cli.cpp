#include "graphtext/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "graphtext/baselines.hpp"
#include "graphtext/corpus.hpp"
#include "graphtext/digest.hpp"
#include "graphtext/errors.hpp"
#include "graphtext/explain.hpp"
#include "graphtext/graph.hpp"
#include "graphtext/harness.hpp"
#include "graphtext/llm_client.hpp"
#include "graphtext/manifest.hpp"
#include "graphtext/model.hpp"
#include "graphtext/prompts.hpp"
#include "graphtext/tripleparse.hpp"

namespace graphtext {

namespace {

namespace fs = std::filesystem;

struct IoOptions {
  std::string text;
  std::string meta;
};

struct LlmFlags {
  bool mock = false;
  std::optional<std::string> config_file;
  std::optional<std::string> cache;
  std::optional<std::string> fixtures;
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<double> temperature;
  std::optional<int> rpm;
  std::optional<int> workers;
  std::optional<int> stride;
  std::optional<int> max_attempts;
  std::optional<int> backoff_ms;
};

struct BuildFlags {
  std::string mode = "binary";
  std::string source = "triples";
  bool transductive = false;
  bool no_self_loops = false;

  HarnessOptions harness() const {
    return HarnessOptions{pooling_mode_from_string(mode),
                          pooling_source_from_string(source), transductive,
                          !no_self_loops};
  }
};

struct TrainFlags {
  TrainConfig config;
  std::optional<double> val_fraction;  // separate default for the harness

  TrainConfig resolved(double default_val_fraction = 0.0) const {
    TrainConfig out = config;
    out.validation_fraction = val_fraction.value_or(default_val_fraction);
    return out;
  }
};

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed_s() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

void add_io_options(CLI::App* cmd, IoOptions& io) {
  cmd->add_option("--text", io.text, "corpus text file (one document per line)")
      ->required();
  cmd->add_option("--meta", io.meta, "corpus meta TSV (<id>\\t<split>\\t<label>)")
      ->required();
}

void add_llm_options(CLI::App* cmd, LlmFlags& llm) {
  cmd->add_flag("--mock", llm.mock, "use the deterministic offline provider");
  cmd->add_option("--config", llm.config_file, "client config JSON");
  cmd->add_option("--cache", llm.cache, "response cache JSONL path");
  cmd->add_option("--fixtures", llm.fixtures, "mock fixture JSONL (doc_id/key -> response)");
  cmd->add_option("--model", llm.model, "provider model name");
  cmd->add_option("--endpoint", llm.endpoint, "chat-completion endpoint URL");
  cmd->add_option("--api-key-env", llm.api_key_env, "credential environment variable");
  cmd->add_option("--temperature", llm.temperature, "sampling temperature");
  cmd->add_option("--rpm", llm.rpm, "requests per minute (0 = unlimited)");
  cmd->add_option("--workers", llm.workers, "parallel request workers");
  cmd->add_option("--stride", llm.stride, "mock extraction trigram stride");
  cmd->add_option("--max-attempts", llm.max_attempts, "transport retry attempts");
  cmd->add_option("--backoff-ms", llm.backoff_ms, "initial retry backoff");
}

void add_build_options(CLI::App* cmd, BuildFlags& build) {
  cmd->add_option("--mode", build.mode, "pooling mode")
      ->check(CLI::IsMember({"binary", "tfidf"}))
      ->capture_default_str();
  cmd->add_option("--pooling-source", build.source,
                  "token source for pooling rows")
      ->check(CLI::IsMember({"triples", "text"}))
      ->capture_default_str();
  cmd->add_flag("--transductive", build.transductive,
                "include test-document triples in vocabulary and graph");
  cmd->add_flag("--no-self-loops", build.no_self_loops,
                "omit self-loops (errors on isolated nodes)");
}

void add_train_options(CLI::App* cmd, TrainFlags& train) {
  cmd->add_option("--lr", train.config.learning_rate, "learning rate")
      ->capture_default_str();
  cmd->add_option("--epochs", train.config.max_epochs, "max epochs")
      ->capture_default_str();
  cmd->add_option("--train-tolerance", train.config.tolerance,
                  "stop when the loss decrease falls below this")
      ->capture_default_str();
  cmd->add_option("--l2", train.config.l2_weight, "L2 regularization weight")
      ->capture_default_str();
  cmd->add_option("--val-fraction", train.val_fraction,
                  "validation fraction carved from train");
  cmd->add_option("--patience", train.config.patience,
                  "early-stopping patience (with validation)")
      ->capture_default_str();
  cmd->add_option("--momentum", train.config.momentum, "momentum term")
      ->capture_default_str();
}

ClientConfig resolve_client(const LlmFlags& flags) {
  ClientConfig config =
      flags.config_file ? load_client_config(*flags.config_file) : ClientConfig{};
  if (flags.model) config.model_name = *flags.model;
  if (flags.endpoint) config.endpoint = *flags.endpoint;
  if (flags.api_key_env) config.api_key_env = *flags.api_key_env;
  if (flags.temperature) config.temperature = *flags.temperature;
  if (flags.rpm) config.requests_per_minute = *flags.rpm;
  if (flags.workers) config.workers = *flags.workers;
  if (flags.stride) config.mock_stride = *flags.stride;
  if (flags.max_attempts) config.max_attempts = *flags.max_attempts;
  if (flags.backoff_ms) config.backoff_ms = *flags.backoff_ms;
  // The offline provider has no throttle to respect.
  if (flags.mock && !flags.rpm) config.requests_per_minute = 0;
  return config;
}

std::unique_ptr<CachingClient> make_client(const LlmFlags& flags) {
  ClientConfig config = resolve_client(flags);
  std::unique_ptr<Completer> provider;
  if (flags.mock) {
    auto mock = std::make_unique<MockCompleter>(config.mock_stride);
    if (flags.fixtures) mock->load_fixtures(*flags.fixtures);
    provider = std::move(mock);
  } else {
    provider = std::make_unique<HttpCompleter>(config);
  }
  std::optional<fs::path> cache_path;
  if (flags.cache) cache_path = fs::path(*flags.cache);
  return std::make_unique<CachingClient>(std::move(provider), config, cache_path);
}

nlohmann::json client_config_json(const LlmFlags& flags) {
  const ClientConfig c = resolve_client(flags);
  return nlohmann::json{{"mock", flags.mock},
                        {"model", c.model_name},
                        {"endpoint", c.endpoint},
                        {"temperature", c.temperature},
                        {"requests_per_minute", c.requests_per_minute},
                        {"workers", c.workers},
                        {"mock_stride", c.mock_stride},
                        {"prompt_version", prompt_version()}};
}

nlohmann::json train_config_json(const TrainConfig& c) {
  return nlohmann::json{{"learning_rate", c.learning_rate},
                        {"max_epochs", c.max_epochs},
                        {"tolerance", c.tolerance},
                        {"l2_weight", c.l2_weight},
                        {"validation_fraction", c.validation_fraction},
                        {"patience", c.patience},
                        {"momentum", c.momentum}};
}

nlohmann::json build_config_json(const BuildFlags& b) {
  return nlohmann::json{{"mode", b.mode},
                        {"pooling_source", b.source},
                        {"transductive", b.transductive},
                        {"self_loops", !b.no_self_loops}};
}

std::string default_manifest_path(const std::string& primary_output) {
  return primary_output + ".manifest.json";
}

void emit_manifest(const std::string& command, nlohmann::json config,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::string>& outputs,
                   const std::map<std::string, std::int64_t>& counters,
                   double wall_time_s, const std::string& path) {
  RunManifest manifest;
  manifest.command = command;
  manifest.config = std::move(config);
  for (const auto& input : inputs) manifest.add_input(input);
  manifest.outputs = outputs;
  manifest.counters = counters;
  manifest.wall_time_s = wall_time_s;
  manifest.timestamp = utc_now_iso8601();
  manifest.write(path);
}

void print_accuracy(double accuracy) {
  std::cout << "accuracy " << std::fixed << std::setprecision(2)
            << accuracy * 100.0 << "\n";
}

void write_predictions_tsv(const std::vector<Prediction>& predictions,
                           const Corpus& corpus, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open predictions file for writing: " + path.string());
  }
  out << "doc_id\tsplit\tgold\tpredicted\tprobs\n";
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& doc : corpus.documents) by_id.emplace(doc.id, &doc);
  for (const auto& p : predictions) {
    const Document* doc = by_id.at(p.doc_id);
    out << p.doc_id << '\t' << to_string(doc->split) << '\t'
        << (doc->label ? *doc->label : "") << '\t' << p.label << '\t';
    for (Eigen::Index c = 0; c < p.probs.size(); ++c) {
      if (c > 0) out << ',';
      out << format_double(p.probs[c]);
    }
    out << '\n';
  }
}

struct StepOutcome {
  std::map<std::string, std::int64_t> counters;
  std::int64_t failed_docs = 0;
};

// refine: render + complete per document, refined-text sidecar out.
StepOutcome do_refine(Corpus& corpus, CachingClient& client,
                      const fs::path& out_path) {
  auto& docs = corpus.documents;
  const auto errors = for_each_parallel(
      docs.size(), client.config().workers, [&](std::size_t i) {
        const std::string prompt = render_refine_prompt(docs[i]);
        docs[i].refined_text =
            client.complete(client.make_request(prompt), docs[i].id);
      });
  StepOutcome outcome;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      ++outcome.failed_docs;
      std::cerr << "refine failed for " << docs[i].id << ": " << *errors[i]
                << "\n";
    }
  }
  write_refinements(corpus, out_path);
  outcome.counters["cache_hits"] = client.cache_hits();
  outcome.counters["provider_calls"] = client.provider_calls();
  outcome.counters["failed_docs"] = outcome.failed_docs;
  return outcome;
}

// extract: render + complete + parse per document, triples JSONL out.
StepOutcome do_extract(const Corpus& corpus, CachingClient& client,
                       const fs::path& out_path,
                       std::vector<ExtractionResult>* results_out = nullptr) {
  const auto& docs = corpus.documents;
  std::vector<ExtractionResult> results(docs.size());
  const auto errors = for_each_parallel(
      docs.size(), client.config().workers, [&](std::size_t i) {
        const std::string prompt = render_extract_prompt(docs[i].display_text());
        const std::string response =
            client.complete(client.make_request(prompt), docs[i].id);
        results[i] = parse_triples(response, docs[i].id);
      });
  StepOutcome outcome;
  std::int64_t malformed = 0;
  std::int64_t none_docs = 0;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      ++outcome.failed_docs;
      std::cerr << "extract failed for " << docs[i].id << ": " << *errors[i]
                << "\n";
      results[i] = ExtractionResult{docs[i].id, {}, true, 0};
    }
    malformed += results[i].malformed_lines;
    if (results[i].is_none) ++none_docs;
  }
  write_triples(results, out_path);
  if (results_out != nullptr) *results_out = std::move(results);
  outcome.counters["malformed_lines"] = malformed;
  outcome.counters["none_docs"] = none_docs;
  outcome.counters["cache_hits"] = client.cache_hits();
  outcome.counters["provider_calls"] = client.provider_calls();
  outcome.counters["failed_docs"] = outcome.failed_docs;
  return outcome;
}

GraphArtifact do_build(const Corpus& corpus,
                       const std::vector<ExtractionResult>& results,
                       const BuildFlags& flags) {
  const HarnessOptions options = flags.harness();
  std::unordered_map<std::string, Split> split_by_id;
  for (const auto& doc : corpus.documents) split_by_id.emplace(doc.id, doc.split);

  std::vector<ExtractionResult> for_graph;
  std::vector<ExtractionResult> for_pooling;
  for (const auto& r : results) {
    auto it = split_by_id.find(r.doc_id);
    if (it == split_by_id.end()) continue;  // stale entry from another corpus
    for_pooling.push_back(r);
    if (it->second == Split::kTrain || options.transductive) {
      for_graph.push_back(r);
    }
  }

  GraphArtifact artifact;
  Vocabulary vocab = build_vocab(for_graph);
  artifact.graph = build_adjacency(for_graph, std::move(vocab), options.self_loops);
  artifact.pooling = build_pooling(for_pooling, corpus, artifact.graph.vocab,
                                   options.mode, options.source);
  artifact.transductive = options.transductive;
  return artifact;
}

int run_refine(const IoOptions& io, const LlmFlags& llm, const std::string& out,
               std::optional<std::string> manifest_path, bool emit) {
  Timer timer;
  Corpus corpus = load_corpus(io.text, io.meta);
  auto client = make_client(llm);
  const StepOutcome outcome = do_refine(corpus, *client, out);
  if (emit) {
    emit_manifest("refine", client_config_json(llm), {io.text, io.meta}, {out},
                  outcome.counters, timer.elapsed_s(),
                  manifest_path.value_or(default_manifest_path(out)));
  }
  return outcome.failed_docs > 0 ? 4 : 0;
}

int run_extract(const IoOptions& io, const LlmFlags& llm,
                const std::optional<std::string>& refined,
                const std::string& out,
                std::optional<std::string> manifest_path, bool emit) {
  Timer timer;
  Corpus corpus = load_corpus(io.text, io.meta);
  std::vector<std::string> inputs{io.text, io.meta};
  if (refined) {
    apply_refinements(corpus, *refined);
    inputs.push_back(*refined);
  }
  auto client = make_client(llm);
  const StepOutcome outcome = do_extract(corpus, *client, out);
  if (emit) {
    emit_manifest("extract", client_config_json(llm), inputs, {out},
                  outcome.counters, timer.elapsed_s(),
                  manifest_path.value_or(default_manifest_path(out)));
  }
  return outcome.failed_docs > 0 ? 4 : 0;
}

int run_build(const IoOptions& io, const std::string& triples_path,
              const BuildFlags& flags, const std::string& out,
              std::optional<std::string> manifest_path, bool emit) {
  Timer timer;
  const Corpus corpus = load_corpus(io.text, io.meta);
  const auto results = read_triples(triples_path);
  const GraphArtifact artifact = do_build(corpus, results, flags);
  save_graph(artifact, out);
  if (emit) {
    std::map<std::string, std::int64_t> counters{
        {"vocab_size", static_cast<std::int64_t>(artifact.graph.vocab.size())},
        {"edge_count", static_cast<std::int64_t>(artifact.graph.edge_count)},
        {"none_docs", artifact.pooling.none_docs},
        {"oov_dropped", artifact.pooling.oov_dropped},
        {"idf_floor_hits", artifact.pooling.idf_floor_hits}};
    emit_manifest("build", build_config_json(flags),
                  {io.text, io.meta, triples_path}, {out}, counters,
                  timer.elapsed_s(),
                  manifest_path.value_or(default_manifest_path(out)));
  }
  return 0;
}

int run_train(const IoOptions& io, const std::string& graph_path,
              const TrainFlags& flags, const std::string& out,
              std::optional<std::string> loss_csv,
              std::optional<std::string> manifest_path, bool emit) {
  Timer timer;
  const Corpus corpus = load_corpus(io.text, io.meta);
  const GraphArtifact artifact = load_graph(graph_path);
  const TrainConfig config = flags.resolved();
  const ClassifierModel model =
      train(artifact.graph, artifact.pooling, corpus, config);
  save_model(model, out);
  const std::string csv = loss_csv.value_or(out + ".loss.csv");
  write_loss_csv(model, csv);
  if (emit) {
    std::map<std::string, std::int64_t> counters{
        {"epochs_run", static_cast<std::int64_t>(model.loss_trace.size()) - 1}};
    emit_manifest("train", train_config_json(config),
                  {io.text, io.meta, graph_path}, {out, csv}, counters,
                  timer.elapsed_s(),
                  manifest_path.value_or(default_manifest_path(out)));
  }
  return 0;
}

int run_eval(const IoOptions& io, const std::string& model_path,
             const std::string& graph_path, const std::string& out,
             std::optional<std::string> manifest_path, bool emit) {
  Timer timer;
  const Corpus corpus = load_corpus(io.text, io.meta);
  const GraphArtifact artifact = load_graph(graph_path);
  const ClassifierModel model = load_model(model_path);
  const auto predictions = predict(model, artifact.graph, artifact.pooling);
  const double test_accuracy = accuracy(predictions, corpus, Split::kTest);
  write_predictions_tsv(predictions, corpus, out);
  print_accuracy(test_accuracy);
  if (emit) {
    std::map<std::string, std::int64_t> counters{
        {"test_docs", static_cast<std::int64_t>(corpus.test_indices().size())}};
    emit_manifest("eval", nlohmann::json::object(),
                  {io.text, io.meta, model_path, graph_path}, {out}, counters,
                  timer.elapsed_s(),
                  manifest_path.value_or(default_manifest_path(out)));
  }
  return 0;
}

int run_eval_limited(const IoOptions& io, const std::string& triples_path,
                     const std::vector<std::size_t>& sizes,
                     const std::vector<std::uint64_t>& seeds,
                     const BuildFlags& build, const TrainFlags& train_flags,
                     const std::string& out,
                     std::optional<std::string> manifest_path, bool emit) {
  Timer timer;
  const Corpus corpus = load_corpus(io.text, io.meta);
  const auto results = read_triples(triples_path);
  // The harness default carves a 0.1 validation fraction for early stopping.
  const TrainConfig config = train_flags.resolved(0.1);
  const auto runs = limited_data_harness(corpus, results, sizes, seeds,
                                         build.harness(), config);
  std::ofstream csv(out, std::ios::binary);
  if (!csv) {
    throw FormatError("cannot open harness CSV for writing: " + out);
  }
  csv << "k,seed,accuracy\n";
  for (const auto& run : runs) {
    csv << run.k << ',' << run.seed << ',' << format_double(run.test_accuracy)
        << '\n';
  }
  for (const auto& summary : summarize_limited(runs)) {
    std::cout << summary.k << "-samples " << std::fixed << std::setprecision(2)
              << summary.mean * 100.0 << " ± " << summary.stddev * 100.0
              << " (" << seeds.size() << " seeds)\n";
  }
  if (emit) {
    nlohmann::json config_json = build_config_json(build);
    config_json["train"] = train_config_json(config);
    config_json["sizes"] = sizes;
    config_json["seeds"] = seeds;
    emit_manifest("eval --limited", config_json,
                  {io.text, io.meta, triples_path}, {out},
                  {{"runs", static_cast<std::int64_t>(runs.size())}},
                  timer.elapsed_s(),
                  manifest_path.value_or(default_manifest_path(out)));
  }
  return 0;
}

int run_explain(const IoOptions& io, const std::string& model_path,
                const std::string& graph_path,
                const std::vector<std::string>& doc_ids, int top_words,
                const std::string& format_name, bool raw_weights,
                const std::optional<std::string>& out_path) {
  if (doc_ids.empty() && top_words <= 0) {
    throw ArgumentError("nothing to explain: pass --doc and/or --top-words");
  }
  const Corpus corpus = load_corpus(io.text, io.meta);
  const GraphArtifact artifact = load_graph(graph_path);
  const ClassifierModel model = load_model(model_path);
  const RenderFormat format = render_format_from_string(format_name);
  const ScoreMode mode =
      raw_weights ? ScoreMode::kRawWeights : ScoreMode::kSmoothed;

  std::ostringstream report;
  if (top_words > 0) {
    report << render_top_words(
        class_top_words(model, artifact.graph, top_words, mode), format);
  }
  std::unordered_map<std::string, Eigen::Index> row_of;
  for (std::size_t i = 0; i < artifact.pooling.doc_ids.size(); ++i) {
    row_of.emplace(artifact.pooling.doc_ids[i], static_cast<Eigen::Index>(i));
  }
  for (const auto& id : doc_ids) {
    const Document* doc = corpus.find(id);
    auto row = row_of.find(id);
    if (doc == nullptr || row == row_of.end()) {
      throw ArgumentError("unknown document id: " + id);
    }
    const auto explanation = explain_document(model, artifact.graph,
                                              artifact.pooling, row->second,
                                              *doc, mode);
    report << render_explanation(explanation, *doc, format) << "\n";
  }

  if (out_path) {
    std::ofstream out(*out_path, std::ios::binary);
    if (!out) {
      throw FormatError("cannot open report for writing: " + *out_path);
    }
    out << report.str();
  } else {
    std::cout << report.str();
  }
  return 0;
}

int run_baseline_tfidf(const IoOptions& io, const TrainFlags& flags,
                       const std::optional<std::string>& model_out,
                       const std::optional<std::string>& summary_path) {
  const Corpus corpus = load_corpus(io.text, io.meta);
  const auto result = tfidf_logreg(corpus, flags.resolved());
  print_accuracy(result.test_accuracy);
  if (model_out) save_model(result.model, *model_out);
  if (summary_path) {
    append_summary_row(*summary_path, "tfidf-lr", 0, result.test_accuracy,
                       corpus.test_indices().size());
  }
  return 0;
}

int run_baseline_llm(const IoOptions& io, const LlmFlags& llm, int shots,
                     const std::optional<std::string>& shot_bank_path,
                     const std::string& out,
                     const std::optional<std::string>& summary_path) {
  const Corpus corpus = load_corpus(io.text, io.meta);
  std::vector<ShotExample> bank;
  if (shot_bank_path) bank = load_shot_bank(*shot_bank_path);
  auto client = make_client(llm);
  const auto report = llm_classify(corpus, corpus.labels, shots, *client, bank,
                                   client->config().workers);
  write_outcomes(report, out);
  print_accuracy(report.accuracy);
  if (summary_path) {
    append_summary_row(*summary_path, "llm", shots, report.accuracy,
                       report.outcomes.size());
  }
  return 0;
}

int run_pipeline(const IoOptions& io, const LlmFlags& llm_in,
                 const BuildFlags& build, const TrainFlags& train_flags,
                 const std::string& out_dir, int explain_top_words) {
  Timer timer;
  fs::create_directories(out_dir);
  LlmFlags llm = llm_in;
  if (!llm.cache) llm.cache = (fs::path(out_dir) / "cache.jsonl").string();

  const fs::path dir(out_dir);
  const std::string refined_path = (dir / "refined.jsonl").string();
  const std::string triples_path = (dir / "triples.jsonl").string();
  const std::string graph_path = (dir / "graph.json").string();
  const std::string model_path = (dir / "model.json").string();
  const std::string loss_path = (dir / "loss.csv").string();
  const std::string predictions_path = (dir / "predictions.tsv").string();
  const std::string topwords_path = (dir / "topwords.json").string();
  const std::string explanations_path = (dir / "explanations.jsonl").string();

  Corpus corpus = load_corpus(io.text, io.meta);
  auto client = make_client(llm);

  StepOutcome refine_outcome = do_refine(corpus, *client, refined_path);
  std::vector<ExtractionResult> results;
  StepOutcome extract_outcome = do_extract(corpus, *client, triples_path, &results);

  const GraphArtifact artifact = do_build(corpus, results, build);
  save_graph(artifact, graph_path);

  const TrainConfig config = train_flags.resolved();
  const ClassifierModel model =
      train(artifact.graph, artifact.pooling, corpus, config);
  save_model(model, model_path);
  write_loss_csv(model, loss_path);

  const auto predictions = predict(model, artifact.graph, artifact.pooling);
  const double test_accuracy = accuracy(predictions, corpus, Split::kTest);
  write_predictions_tsv(predictions, corpus, predictions_path);

  {
    std::ofstream top(topwords_path, std::ios::binary);
    const int k = std::min<int>(explain_top_words,
                                static_cast<int>(artifact.graph.vocab.size()));
    top << render_top_words(class_top_words(model, artifact.graph, k),
                            RenderFormat::kJson)
        << '\n';
    std::ofstream expl(explanations_path, std::ios::binary);
    std::unordered_map<std::string, Eigen::Index> row_of;
    for (std::size_t i = 0; i < artifact.pooling.doc_ids.size(); ++i) {
      row_of.emplace(artifact.pooling.doc_ids[i], static_cast<Eigen::Index>(i));
    }
    for (const std::size_t idx : corpus.test_indices()) {
      const Document& doc = corpus.documents[idx];
      const auto explanation =
          explain_document(model, artifact.graph, artifact.pooling,
                           row_of.at(doc.id), doc);
      expl << explanation_to_json(explanation, doc).dump() << '\n';
    }
  }

  print_accuracy(test_accuracy);

  std::map<std::string, std::int64_t> counters = extract_outcome.counters;
  counters["failed_docs"] += refine_outcome.counters["failed_docs"];
  counters["cache_hits"] = client->cache_hits();
  counters["provider_calls"] = client->provider_calls();
  counters["oov_dropped"] = artifact.pooling.oov_dropped;
  counters["vocab_size"] = static_cast<std::int64_t>(artifact.graph.vocab.size());
  counters["edge_count"] = static_cast<std::int64_t>(artifact.graph.edge_count);

  nlohmann::json config_json{{"client", client_config_json(llm)},
                             {"build", build_config_json(build)},
                             {"train", train_config_json(config)}};
  emit_manifest("pipeline", config_json, {io.text, io.meta},
                {refined_path, triples_path, graph_path, model_path, loss_path,
                 predictions_path, topwords_path, explanations_path},
                counters, timer.elapsed_s(), (dir / "manifest.json").string());

  const std::int64_t failed =
      refine_outcome.failed_docs + extract_outcome.failed_docs;
  return failed > 0 ? 4 : 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{
      "graphtext: knowledge-graph text classification with an interpretable "
      "one-layer graph convolution"};
  app.require_subcommand(1);

  // refine
  auto* refine = app.add_subcommand("refine", "LLM text refinement per document");
  IoOptions refine_io;
  LlmFlags refine_llm;
  std::string refine_out;
  std::optional<std::string> refine_manifest;
  add_io_options(refine, refine_io);
  add_llm_options(refine, refine_llm);
  refine->add_option("--out", refine_out, "refined-text sidecar JSONL")->required();
  refine->add_option("--manifest", refine_manifest, "manifest path");

  // extract
  auto* extract = app.add_subcommand("extract", "knowledge-graph extraction per document");
  IoOptions extract_io;
  LlmFlags extract_llm;
  std::optional<std::string> extract_refined;
  std::string extract_out;
  std::optional<std::string> extract_manifest;
  add_io_options(extract, extract_io);
  add_llm_options(extract, extract_llm);
  extract->add_option("--refined", extract_refined, "refined-text sidecar to use");
  extract->add_option("--out", extract_out, "triples JSONL output")->required();
  extract->add_option("--manifest", extract_manifest, "manifest path");

  // build
  auto* build = app.add_subcommand("build", "word graph and pooling matrix from triples");
  IoOptions build_io;
  BuildFlags build_flags;
  std::string build_triples;
  std::string build_out;
  std::optional<std::string> build_manifest;
  add_io_options(build, build_io);
  add_build_options(build, build_flags);
  build->add_option("--triples", build_triples, "triples JSONL input")->required();
  build->add_option("--out", build_out, "graph artifact output")->required();
  build->add_option("--manifest", build_manifest, "manifest path");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the one-layer graph classifier");
  IoOptions train_io;
  TrainFlags train_flags;
  std::string train_graph;
  std::string train_out;
  std::optional<std::string> train_loss_csv;
  std::optional<std::string> train_manifest;
  add_io_options(train_cmd, train_io);
  add_train_options(train_cmd, train_flags);
  train_cmd->add_option("--graph", train_graph, "graph artifact")->required();
  train_cmd->add_option("--out", train_out, "model artifact output")->required();
  train_cmd->add_option("--loss-csv", train_loss_csv, "loss trace CSV path");
  train_cmd->add_option("--manifest", train_manifest, "manifest path");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a model, or run the limited-data harness");
  IoOptions eval_io;
  TrainFlags eval_train;
  BuildFlags eval_build;
  std::string eval_model;
  std::string eval_graph;
  std::string eval_triples;
  std::string eval_out = "predictions.tsv";
  std::vector<std::size_t> eval_limited;
  std::vector<std::uint64_t> eval_seeds;
  std::optional<std::string> eval_manifest;
  add_io_options(eval, eval_io);
  add_train_options(eval, eval_train);
  add_build_options(eval, eval_build);
  eval->add_option("--model", eval_model, "model artifact");
  eval->add_option("--graph", eval_graph, "graph artifact");
  eval->add_option("--triples", eval_triples, "triples JSONL (limited mode)");
  eval->add_option("--out", eval_out, "predictions TSV or harness CSV")
      ->capture_default_str();
  eval->add_option("--limited", eval_limited, "train sizes for the limited-data harness")
      ->delimiter(',');
  eval->add_option("--seeds", eval_seeds, "seeds for the limited-data harness")
      ->delimiter(',');
  eval->add_option("--manifest", eval_manifest, "manifest path");

  // explain
  auto* explain = app.add_subcommand("explain", "word-importance reports");
  IoOptions explain_io;
  std::string explain_model;
  std::string explain_graph;
  std::vector<std::string> explain_docs;
  int explain_top_words = 0;
  std::string explain_format = "ansi";
  bool explain_raw = false;
  std::optional<std::string> explain_out;
  add_io_options(explain, explain_io);
  explain->add_option("--model", explain_model, "model artifact")->required();
  explain->add_option("--graph", explain_graph, "graph artifact")->required();
  explain->add_option("--doc", explain_docs, "document id to explain (repeatable)");
  explain->add_option("--top-words", explain_top_words, "per-class top-k word report");
  explain->add_option("--format", explain_format, "output format")
      ->check(CLI::IsMember({"ansi", "md", "json"}))
      ->capture_default_str();
  explain->add_flag("--raw-w", explain_raw, "rank by raw weights instead of smoothed scores");
  explain->add_option("--out", explain_out, "write the report here instead of stdout");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "TF-IDF+LR and LLM few-shot baselines");
  IoOptions baseline_io;
  LlmFlags baseline_llm;
  TrainFlags baseline_train;
  std::string baseline_method;
  int baseline_shots = 0;
  std::optional<std::string> baseline_shot_bank;
  std::string baseline_out = "outcomes.jsonl";
  std::optional<std::string> baseline_model_out;
  std::optional<std::string> baseline_summary;
  add_io_options(baseline, baseline_io);
  add_llm_options(baseline, baseline_llm);
  add_train_options(baseline, baseline_train);
  baseline->add_option("--method", baseline_method, "tfidf-lr or llm")
      ->check(CLI::IsMember({"tfidf-lr", "llm"}))
      ->required();
  baseline->add_option("--shots", baseline_shots, "in-prompt examples {0,1,2,5}")
      ->capture_default_str();
  baseline->add_option("--shot-bank", baseline_shot_bank, "shot example JSONL");
  baseline->add_option("--out", baseline_out, "few-shot outcomes JSONL")
      ->capture_default_str();
  baseline->add_option("--model-out", baseline_model_out, "save the TF-IDF+LR model here");
  baseline->add_option("--summary", baseline_summary, "append `method shots accuracy n` TSV row");

  // pipeline
  auto* pipeline = app.add_subcommand(
      "pipeline", "refine -> extract -> build -> train -> eval in one run");
  IoOptions pipeline_io;
  LlmFlags pipeline_llm;
  BuildFlags pipeline_build;
  TrainFlags pipeline_train;
  std::string pipeline_out_dir;
  int pipeline_top_words = 10;
  add_io_options(pipeline, pipeline_io);
  add_llm_options(pipeline, pipeline_llm);
  add_build_options(pipeline, pipeline_build);
  add_train_options(pipeline, pipeline_train);
  pipeline->add_option("--out-dir", pipeline_out_dir, "artifact directory")->required();
  pipeline->add_option("--top-words", pipeline_top_words, "per-class top-k in the report")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (refine->parsed()) {
      return run_refine(refine_io, refine_llm, refine_out, refine_manifest, true);
    }
    if (extract->parsed()) {
      return run_extract(extract_io, extract_llm, extract_refined, extract_out,
                         extract_manifest, true);
    }
    if (build->parsed()) {
      return run_build(build_io, build_triples, build_flags, build_out,
                       build_manifest, true);
    }
    if (train_cmd->parsed()) {
      return run_train(train_io, train_graph, train_flags, train_out,
                       train_loss_csv, train_manifest, true);
    }
    if (eval->parsed()) {
      if (!eval_limited.empty()) {
        if (eval_triples.empty()) {
          throw ArgumentError("--limited needs --triples");
        }
        if (eval_seeds.empty()) eval_seeds = {1, 2, 3, 4, 5};
        return run_eval_limited(eval_io, eval_triples, eval_limited, eval_seeds,
                                eval_build, eval_train, eval_out, eval_manifest,
                                true);
      }
      if (eval_model.empty() || eval_graph.empty()) {
        throw ArgumentError("eval needs --model and --graph (or --limited)");
      }
      return run_eval(eval_io, eval_model, eval_graph, eval_out, eval_manifest,
                      true);
    }
    if (explain->parsed()) {
      return run_explain(explain_io, explain_model, explain_graph, explain_docs,
                         explain_top_words, explain_format, explain_raw,
                         explain_out);
    }
    if (baseline->parsed()) {
      if (baseline_method == "tfidf-lr") {
        return run_baseline_tfidf(baseline_io, baseline_train,
                                  baseline_model_out, baseline_summary);
      }
      return run_baseline_llm(baseline_io, baseline_llm, baseline_shots,
                              baseline_shot_bank, baseline_out, baseline_summary);
    }
    if (pipeline->parsed()) {
      return run_pipeline(pipeline_io, pipeline_llm, pipeline_build,
                          pipeline_train, pipeline_out_dir, pipeline_top_words);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return 2;
}

}  // namespace graphtext
