#include "graphtext/explain.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "graphtext/errors.hpp"
#include "graphtext/tokenize.hpp"

namespace graphtext {

namespace {

Eigen::MatrixXd score_matrix(const ClassifierModel& model,
                             const TextGraph& graph, ScoreMode mode) {
  if (!(model.vocab == graph.vocab)) {
    throw CompatibilityError("model vocabulary " + model.vocab.digest() +
                             " does not match graph vocabulary " +
                             graph.vocab.digest());
  }
  if (mode == ScoreMode::kRawWeights) return model.weights;
  return graph.norm_adjacency * model.weights;
}

struct StyledSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  int rank = 0;  // 1 = primary style, 2 = secondary
};

// Walks whitespace-separated pieces of the display text; a piece whose
// normalized token matches a highlighted token gets its trimmed core styled.
// Every occurrence is marked.
std::vector<StyledSpan> find_spans(
    const std::string& text,
    const std::unordered_map<std::string, int>& rank_by_token) {
  std::vector<StyledSpan> spans;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto is_word = [](unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
  };
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < n && !is_space(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;
    std::size_t lo = start;
    std::size_t hi = i;
    while (lo < hi && !is_word(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && !is_word(static_cast<unsigned char>(text[hi - 1]))) --hi;
    if (lo == hi) continue;
    std::string token;
    token.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) {
      token.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(text[k]))));
    }
    auto it = rank_by_token.find(token);
    if (it != rank_by_token.end()) {
      spans.push_back(StyledSpan{lo, hi, it->second});
    }
  }
  return spans;
}

std::string style_text(const std::string& text,
                       const std::vector<StyledSpan>& spans,
                       RenderFormat format) {
  std::string out;
  out.reserve(text.size() + spans.size() * 16);
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    out.append(text, cursor, span.begin - cursor);
    const std::string core = text.substr(span.begin, span.end - span.begin);
    if (format == RenderFormat::kAnsi) {
      out += span.rank == 1 ? "\x1b[1;31m" + core + "\x1b[0m"
                            : "\x1b[34m" + core + "\x1b[0m";
    } else {
      out += span.rank == 1 ? "**" + core + "**" : "*" + core + "*";
    }
    cursor = span.end;
  }
  out.append(text, cursor, text.size() - cursor);
  return out;
}

}  // namespace

RenderFormat render_format_from_string(const std::string& s) {
  if (s == "ansi") return RenderFormat::kAnsi;
  if (s == "md") return RenderFormat::kMarkdown;
  if (s == "json") return RenderFormat::kJson;
  throw ArgumentError("unknown render format: " + s);
}

std::vector<std::vector<WordImportance>> class_top_words(
    const ClassifierModel& model, const TextGraph& graph, int k,
    ScoreMode mode) {
  if (k <= 0 || static_cast<std::size_t>(k) > model.vocab.size()) {
    throw ArgumentError("k must be in [1, |V|]");
  }
  const Eigen::MatrixXd scores = score_matrix(model, graph, mode);
  std::vector<std::vector<WordImportance>> per_class;
  per_class.reserve(model.labels.size());
  for (std::size_t c = 0; c < model.labels.size(); ++c) {
    std::vector<int> order(model.vocab.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double sa = scores(a, static_cast<Eigen::Index>(c));
      const double sb = scores(b, static_cast<Eigen::Index>(c));
      if (sa != sb) return sa > sb;
      return model.vocab.token(a) < model.vocab.token(b);
    });
    std::vector<WordImportance> top;
    top.reserve(static_cast<std::size_t>(k));
    for (int r = 0; r < k; ++r) {
      top.push_back(WordImportance{model.vocab.token(order[static_cast<std::size_t>(r)]),
                                   model.labels.names()[c],
                                   scores(order[static_cast<std::size_t>(r)],
                                          static_cast<Eigen::Index>(c))});
    }
    per_class.push_back(std::move(top));
  }
  return per_class;
}

DocExplanation explain_document(const ClassifierModel& model,
                                const TextGraph& graph,
                                const PoolingMatrix& pooling,
                                Eigen::Index row, const Document& doc,
                                ScoreMode mode) {
  if (row < 0 || row >= pooling.entries.rows()) {
    throw ArgumentError("pooling row out of range");
  }
  // Contributions always decompose the logit via the smoothed scores
  // M = A_norm W; the raw-weights mode only changes which tokens get
  // highlighted.
  const Eigen::MatrixXd smoothed = score_matrix(model, graph, ScoreMode::kSmoothed);

  DocExplanation explanation;
  explanation.doc_id = doc.id;

  // Nonzero pooling entries of this document, in column order.
  const SpMat row_matrix = pooling.entries.middleRows(row, 1);
  std::vector<std::pair<int, double>> row_entries;
  for (int k = 0; k < row_matrix.outerSize(); ++k) {
    for (SpMat::InnerIterator it(row_matrix, k); it; ++it) {
      row_entries.emplace_back(static_cast<int>(it.col()), it.value());
    }
  }

  Eigen::RowVectorXd logit_row =
      Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(model.labels.size()));
  for (const auto& [word, s_value] : row_entries) {
    logit_row += s_value * smoothed.row(word);
  }
  int predicted = 0;
  for (int c = 1; c < logit_row.size(); ++c) {
    if (logit_row[c] > logit_row[predicted]) predicted = c;
  }
  explanation.predicted_class = predicted;
  explanation.predicted_label = model.labels.name(predicted);
  explanation.logit = logit_row[predicted];

  if (row_entries.empty()) {
    explanation.no_knowledge = true;
    return explanation;
  }

  for (const auto& [word, s_value] : row_entries) {
    explanation.contributions.push_back(Contribution{
        model.vocab.token(word), s_value * smoothed(word, predicted)});
  }
  std::sort(explanation.contributions.begin(), explanation.contributions.end(),
            [](const Contribution& a, const Contribution& b) {
              if (a.value != b.value) return a.value > b.value;
              return a.token < b.token;
            });

  std::vector<Contribution> highlight_order = explanation.contributions;
  if (mode == ScoreMode::kRawWeights) {
    for (auto& c : highlight_order) {
      const int word = model.vocab.id(c.token);
      c.value = row_matrix.coeff(0, word) * model.weights(word, predicted);
    }
    std::sort(highlight_order.begin(), highlight_order.end(),
              [](const Contribution& a, const Contribution& b) {
                if (a.value != b.value) return a.value > b.value;
                return a.token < b.token;
              });
  }

  explanation.top_token = highlight_order.front().token;
  for (std::size_t r = 1; r < highlight_order.size() && r < 5; ++r) {
    explanation.secondary_tokens.push_back(highlight_order[r].token);
  }
  return explanation;
}

namespace {

struct HighlightLayout {
  std::vector<StyledSpan> spans;
  std::vector<std::string> footnote;  // highlighted tokens absent from text
};

HighlightLayout layout_highlights(const DocExplanation& explanation,
                                  const std::string& text) {
  std::unordered_map<std::string, int> rank_by_token;
  if (!explanation.no_knowledge) {
    rank_by_token.emplace(explanation.top_token, 1);
    for (const auto& t : explanation.secondary_tokens) {
      rank_by_token.emplace(t, 2);
    }
  }
  HighlightLayout layout;
  layout.spans = find_spans(text, rank_by_token);
  std::unordered_set<std::string> found;
  for (const auto& span : layout.spans) {
    std::string token;
    for (std::size_t k = span.begin; k < span.end; ++k) {
      token.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(text[k]))));
    }
    found.insert(token);
  }
  for (const auto& [token, rank] : rank_by_token) {
    (void)rank;
    if (!found.contains(token)) layout.footnote.push_back(token);
  }
  std::sort(layout.footnote.begin(), layout.footnote.end());
  return layout;
}

}  // namespace

nlohmann::json explanation_to_json(const DocExplanation& explanation,
                                   const Document& doc) {
  const std::string& text = doc.display_text();
  const auto layout = layout_highlights(explanation, text);
  nlohmann::json contributions = nlohmann::json::array();
  for (const auto& c : explanation.contributions) {
    contributions.push_back({{"token", c.token}, {"value", c.value}});
  }
  return nlohmann::json{{"doc_id", explanation.doc_id},
                        {"predicted_label", explanation.predicted_label},
                        {"logit", explanation.logit},
                        {"no_knowledge", explanation.no_knowledge},
                        {"contributions", std::move(contributions)},
                        {"top_token", explanation.top_token},
                        {"secondary_tokens", explanation.secondary_tokens},
                        {"footnote_tokens", layout.footnote},
                        {"text", text}};
}

std::string render_explanation(const DocExplanation& explanation,
                               const Document& doc, RenderFormat format) {
  const std::string& text = doc.display_text();
  const auto layout = layout_highlights(explanation, text);
  const auto& spans = layout.spans;
  const auto& footnote = layout.footnote;

  if (format == RenderFormat::kJson) {
    return explanation_to_json(explanation, doc).dump(2);
  }

  std::ostringstream out;
  const bool md = format == RenderFormat::kMarkdown;
  if (md) {
    out << "### Document " << explanation.doc_id << " — predicted `"
        << explanation.predicted_label << "`\n\n";
  } else {
    out << "Document " << explanation.doc_id << " — predicted "
        << explanation.predicted_label << "\n";
  }
  if (explanation.no_knowledge) {
    out << (md ? "_no extracted knowledge: empty pooling row, uniform "
                 "prediction_\n"
               : "no extracted knowledge: empty pooling row, uniform "
                 "prediction\n");
    return out.str();
  }
  out << style_text(text, spans, format) << "\n";
  if (!footnote.empty()) {
    out << (md ? "\nNot shown in text: " : "\nnot shown in text: ");
    for (std::size_t i = 0; i < footnote.size(); ++i) {
      if (i > 0) out << ", ";
      out << footnote[i];
    }
    out << "\n";
  }
  out << (md ? "\n| token | contribution |\n|---|---|\n" : "\n");
  const std::size_t shown = std::min<std::size_t>(explanation.contributions.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& c = explanation.contributions[i];
    if (md) {
      out << "| " << c.token << " | " << c.value << " |\n";
    } else {
      out << "  " << c.token << "  " << c.value << "\n";
    }
  }
  return out.str();
}

std::string render_top_words(
    const std::vector<std::vector<WordImportance>>& per_class,
    RenderFormat format) {
  if (format == RenderFormat::kJson) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& cls : per_class) {
      nlohmann::json words = nlohmann::json::array();
      for (const auto& w : cls) {
        words.push_back({{"token", w.token}, {"score", w.score}});
      }
      out.push_back({{"class", cls.empty() ? "" : cls.front().class_label},
                     {"words", std::move(words)}});
    }
    return out.dump(2);
  }
  std::ostringstream out;
  const bool md = format == RenderFormat::kMarkdown;
  for (const auto& cls : per_class) {
    if (cls.empty()) continue;
    if (md) {
      out << "**" << cls.front().class_label << "**: ";
    } else {
      out << cls.front().class_label << ": ";
    }
    for (std::size_t i = 0; i < cls.size(); ++i) {
      if (i > 0) out << ", ";
      out << cls[i].token;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace graphtext
