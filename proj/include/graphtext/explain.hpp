#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "graphtext/model.hpp"

namespace graphtext {

/// Which per-word score to rank by: the smoothed score M = A_norm W that
/// actually enters the logits (default), or the raw weight rows of W.
enum class ScoreMode { kSmoothed, kRawWeights };

struct WordImportance {
  std::string token;
  std::string class_label;
  double score = 0.0;
};

/// For each class, the k tokens with the largest score; ties break
/// lexicographically. k must not exceed |V|.
std::vector<std::vector<WordImportance>> class_top_words(
    const ClassifierModel& model, const TextGraph& graph, int k,
    ScoreMode mode = ScoreMode::kSmoothed);

struct Contribution {
  std::string token;
  double value = 0.0;
};

/// Decomposition of one document's predicted-class logit into per-token
/// contributions S_ji * M_i,c (complete: they sum to the logit exactly).
struct DocExplanation {
  std::string doc_id;
  std::string predicted_label;
  int predicted_class = 0;
  double logit = 0.0;
  bool no_knowledge = false;  // zero pooling row
  std::vector<Contribution> contributions;   // sorted descending
  std::string top_token;                     // rank 1
  std::vector<std::string> secondary_tokens; // ranks 2..5
};

DocExplanation explain_document(const ClassifierModel& model,
                                const TextGraph& graph,
                                const PoolingMatrix& pooling,
                                Eigen::Index row, const Document& doc,
                                ScoreMode mode = ScoreMode::kSmoothed);

enum class RenderFormat { kAnsi, kMarkdown, kJson };

RenderFormat render_format_from_string(const std::string& s);

/// Table-style report: the document text with the rank-1 token highlighted
/// in style A (red / bold) and ranks 2-5 in style B (blue / italic) at every
/// occurrence; highlighted tokens absent from the text are footnoted.
std::string render_explanation(const DocExplanation& explanation,
                               const Document& doc, RenderFormat format);

/// Same content as the JSON rendering, as an object (for JSONL emitters).
nlohmann::json explanation_to_json(const DocExplanation& explanation,
                                   const Document& doc);

std::string render_top_words(
    const std::vector<std::vector<WordImportance>>& per_class,
    RenderFormat format);

}  // namespace graphtext
