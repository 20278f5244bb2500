#pragma once

#include <cstdint>
#include <vector>

#include "graphtext/corpus.hpp"
#include "graphtext/graph.hpp"
#include "graphtext/model.hpp"
#include "graphtext/tripleparse.hpp"

namespace graphtext {

struct LimitedRun {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
};

struct LimitedSummary {
  std::size_t k = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over seeds
};

struct HarnessOptions {
  PoolingMode mode = PoolingMode::kBinary;
  PoolingSource source = PoolingSource::kTriples;
  bool transductive = false;
  bool self_loops = true;
};

/// Limited-training-data protocol: for each (k, seed), subsample the train
/// split, rebuild vocabulary/graph/pooling from the subsample, train, and
/// score on the unchanged test split.
std::vector<LimitedRun> limited_data_harness(
    const Corpus& corpus, const std::vector<ExtractionResult>& results,
    const std::vector<std::size_t>& sizes,
    const std::vector<std::uint64_t>& seeds, const HarnessOptions& options,
    const TrainConfig& config);

std::vector<LimitedSummary> summarize_limited(const std::vector<LimitedRun>& runs);

/// One full build+train+eval with a fixed corpus; the single-run counterpart
/// of the limited harness.
struct FullRunResult {
  TextGraph graph;
  PoolingMatrix pooling;
  ClassifierModel model;
  std::vector<Prediction> predictions;
  double test_accuracy = 0.0;
};

FullRunResult full_run(const Corpus& corpus,
                       const std::vector<ExtractionResult>& results,
                       const HarnessOptions& options, const TrainConfig& config);

}  // namespace graphtext
