#include "graphtext/baselines.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "graphtext/errors.hpp"
#include "graphtext/text_util.hpp"
#include "graphtext/tokenize.hpp"

namespace graphtext {

TfidfLogRegResult tfidf_logreg(const Corpus& corpus, const TrainConfig& config) {
  // Vocabulary over tokenized raw training text; with an edgeless graph the
  // classifier is exactly multinomial logistic regression on TF-IDF features.
  std::vector<TokenStream> streams;
  streams.reserve(corpus.documents.size());
  std::vector<TokenStream> train_streams;
  for (const auto& doc : corpus.documents) {
    streams.push_back(tokenize(doc.raw_text));
    if (doc.split == Split::kTrain) train_streams.push_back(streams.back());
  }
  Vocabulary vocab = build_vocab_from_streams(train_streams);
  TextGraph graph = identity_graph(std::move(vocab));
  PoolingMatrix features = build_pooling_streams(streams, corpus, graph.vocab,
                                                 PoolingMode::kTfidf);

  TfidfLogRegResult result;
  result.model = train(graph, features, corpus, config);
  const auto predictions = predict(result.model, graph, features);
  result.train_accuracy = accuracy(predictions, corpus, Split::kTrain);
  result.test_accuracy = accuracy(predictions, corpus, Split::kTest);
  return result;
}

std::optional<std::string> parse_label_response(std::string_view response,
                                                const LabelSet& labels) {
  const std::string trimmed = trim(response);
  for (const auto& name : labels.names()) {
    if (iequals(trimmed, name)) return name;
  }

  // A sentence containing exactly one label name as a whole word parses as
  // that label; several distinct label names make the response ambiguous.
  const std::string lowered = to_lower(trimmed);
  auto is_boundary = [&](std::size_t pos) {
    if (pos >= lowered.size()) return true;
    const unsigned char c = static_cast<unsigned char>(lowered[pos]);
    return std::isalnum(c) == 0 && c != '-' && c < 0x80;
  };
  std::optional<std::string> found;
  for (const auto& name : labels.names()) {
    const std::string needle = to_lower(name);
    std::size_t pos = 0;
    bool present = false;
    while ((pos = lowered.find(needle, pos)) != std::string::npos) {
      const bool left_ok = pos == 0 || is_boundary(pos - 1);
      const bool right_ok = is_boundary(pos + needle.size());
      if (left_ok && right_ok) {
        present = true;
        break;
      }
      ++pos;
    }
    if (present) {
      if (found) return std::nullopt;  // more than one label mentioned
      found = name;
    }
  }
  return found;
}

FewShotReport llm_classify(const Corpus& corpus, const LabelSet& labels,
                           int shots, CachingClient& client,
                           const std::vector<ShotExample>& shot_bank,
                           int workers) {
  const auto test_idx = corpus.test_indices();
  FewShotReport report;
  report.shots = shots;
  report.outcomes.resize(test_idx.size());

  auto classify_one = [&](std::size_t i) {
    const Document& doc = corpus.documents[test_idx[i]];
    FewShotOutcome& outcome = report.outcomes[i];
    outcome.doc_id = doc.id;
    const std::string prompt =
        render_classify_prompt(doc, labels, shots, shot_bank);
    outcome.raw_response = client.complete(client.make_request(prompt), doc.id);
    outcome.parsed_label = parse_label_response(outcome.raw_response, labels);
    outcome.in_label_set = outcome.parsed_label.has_value();
    outcome.correct = outcome.parsed_label && doc.label &&
                      *outcome.parsed_label == *doc.label;
  };

  const auto errors = for_each_parallel(test_idx.size(), workers, classify_one);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
    FewShotOutcome& outcome = report.outcomes[i];
    if (errors[i]) {
      // Abstention: the document stays in the accounting as incorrect.
      outcome.doc_id = corpus.documents[test_idx[i]].id;
      outcome.error = errors[i];
      outcome.parsed_label.reset();
      outcome.in_label_set = false;
      outcome.correct = false;
    }
    if (outcome.correct) ++correct;
  }
  report.accuracy = report.outcomes.empty()
                        ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(report.outcomes.size());
  return report;
}

void write_outcomes(const FewShotReport& report,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open outcomes file for writing: " + path.string());
  }
  for (const auto& o : report.outcomes) {
    nlohmann::json record{{"doc_id", o.doc_id},
                          {"raw_response", o.raw_response},
                          {"parsed_label", o.parsed_label
                                               ? nlohmann::json(*o.parsed_label)
                                               : nlohmann::json(nullptr)},
                          {"in_label_set", o.in_label_set},
                          {"correct", o.correct}};
    if (o.error) record["error"] = *o.error;
    out << record.dump() << '\n';
  }
}

void append_summary_row(const std::filesystem::path& path,
                        const std::string& method, int shots, double accuracy,
                        std::size_t n) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) {
    throw FormatError("cannot open summary file for writing: " + path.string());
  }
  if (fresh) out << "method\tshots\taccuracy\tn\n";
  out << method << '\t' << shots << '\t' << std::fixed << std::setprecision(2)
      << accuracy * 100.0 << '\t' << n << '\n';
}

}  // namespace graphtext
