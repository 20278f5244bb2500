#include "graphtext/harness.hpp"

#include <cmath>
#include <map>
#include <unordered_set>

#include "graphtext/errors.hpp"

namespace graphtext {

namespace {

// Extraction results restricted to the graph-building documents: the train
// split, plus the test split in transductive mode (triples only, never
// labels).
std::vector<ExtractionResult> graph_results(
    const Corpus& corpus, const std::vector<ExtractionResult>& results,
    bool transductive) {
  std::unordered_set<std::string> keep;
  for (const auto& doc : corpus.documents) {
    if (doc.split == Split::kTrain || transductive) keep.insert(doc.id);
  }
  std::vector<ExtractionResult> out;
  out.reserve(results.size());
  for (const auto& r : results) {
    if (keep.contains(r.doc_id)) out.push_back(r);
  }
  return out;
}

std::vector<ExtractionResult> corpus_results(
    const Corpus& corpus, const std::vector<ExtractionResult>& results) {
  std::unordered_set<std::string> keep;
  for (const auto& doc : corpus.documents) keep.insert(doc.id);
  std::vector<ExtractionResult> out;
  out.reserve(corpus.documents.size());
  for (const auto& r : results) {
    if (keep.contains(r.doc_id)) out.push_back(r);
  }
  return out;
}

}  // namespace

FullRunResult full_run(const Corpus& corpus,
                       const std::vector<ExtractionResult>& results,
                       const HarnessOptions& options,
                       const TrainConfig& config) {
  const auto for_graph = graph_results(corpus, results, options.transductive);
  Vocabulary vocab = build_vocab(for_graph);

  FullRunResult run;
  run.graph = build_adjacency(for_graph, std::move(vocab), options.self_loops);
  run.pooling = build_pooling(corpus_results(corpus, results), corpus,
                              run.graph.vocab, options.mode, options.source);
  run.model = train(run.graph, run.pooling, corpus, config);
  run.predictions = predict(run.model, run.graph, run.pooling);
  run.test_accuracy = accuracy(run.predictions, corpus, Split::kTest);
  return run;
}

std::vector<LimitedRun> limited_data_harness(
    const Corpus& corpus, const std::vector<ExtractionResult>& results,
    const std::vector<std::size_t>& sizes,
    const std::vector<std::uint64_t>& seeds, const HarnessOptions& options,
    const TrainConfig& config) {
  if (sizes.empty() || seeds.empty()) {
    throw ArgumentError("limited harness needs at least one size and one seed");
  }
  std::vector<LimitedRun> runs;
  runs.reserve(sizes.size() * seeds.size());
  for (std::size_t k : sizes) {
    for (std::uint64_t seed : seeds) {
      const Corpus subsampled = subsample_train(corpus, k, seed);
      const auto run = full_run(subsampled, results, options, config);
      runs.push_back(LimitedRun{k, seed, run.test_accuracy});
    }
  }
  return runs;
}

std::vector<LimitedSummary> summarize_limited(
    const std::vector<LimitedRun>& runs) {
  std::map<std::size_t, std::vector<double>> by_k;
  for (const auto& run : runs) by_k[run.k].push_back(run.test_accuracy);
  std::vector<LimitedSummary> out;
  out.reserve(by_k.size());
  for (const auto& [k, values] : by_k) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    if (values.size() > 1) {
      for (double v : values) var += (v - mean) * (v - mean);
      var /= static_cast<double>(values.size() - 1);
    }
    out.push_back(LimitedSummary{k, mean, std::sqrt(var)});
  }
  return out;
}

}  // namespace graphtext
