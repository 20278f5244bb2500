#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graphtext/corpus.hpp"
#include "graphtext/llm_client.hpp"
#include "graphtext/model.hpp"
#include "graphtext/prompts.hpp"

namespace graphtext {

struct TfidfLogRegResult {
  ClassifierModel model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// TF-IDF features over tokenized raw text (vocabulary and document
/// frequencies fit on the training split), trained with the same convex
/// full-batch descent as the graph classifier.
TfidfLogRegResult tfidf_logreg(const Corpus& corpus, const TrainConfig& config);

struct FewShotOutcome {
  std::string doc_id;
  std::string raw_response;
  std::optional<std::string> parsed_label;
  bool in_label_set = false;
  bool correct = false;
  std::optional<std::string> error;
};

struct FewShotReport {
  int shots = 0;
  std::vector<FewShotOutcome> outcomes;  // one per test document
  double accuracy = 0.0;
};

/// Trimmed case-insensitive match against the label set; otherwise a
/// response containing exactly one label name as a whole word parses as
/// that label. Anything else is unparsed.
std::optional<std::string> parse_label_response(std::string_view response,
                                                const LabelSet& labels);

/// Prompts the client once per test document. Non-set labels score
/// incorrect with in_label_set = false; per-document transport failures are
/// recorded as abstentions with an error note, never aborting the batch.
FewShotReport llm_classify(const Corpus& corpus, const LabelSet& labels,
                           int shots, CachingClient& client,
                           const std::vector<ShotExample>& shot_bank,
                           int workers = 4);

void write_outcomes(const FewShotReport& report, const std::filesystem::path& path);

/// Summary TSV row `method shots accuracy n` (header included, accuracy in
/// percent to two decimals).
void append_summary_row(const std::filesystem::path& path,
                        const std::string& method, int shots, double accuracy,
                        std::size_t n);

}  // namespace graphtext
