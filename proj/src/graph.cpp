#include "graphtext/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "graphtext/digest.hpp"
#include "graphtext/errors.hpp"

namespace graphtext {

namespace {

constexpr int kGraphArtifactVersion = 1;

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> sorted_unique_tokens)
    : tokens_(std::move(sorted_unique_tokens)) {
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i > 0 && !(tokens_[i - 1] < tokens_[i])) {
      throw ArgumentError("vocabulary tokens must be sorted and distinct");
    }
    index_.emplace(tokens_[i], static_cast<int>(i));
  }
}

std::optional<int> Vocabulary::find(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) {
    throw StateError("token not in vocabulary: " + token);
  }
  return it->second;
}

std::string Vocabulary::digest() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined.push_back('\n');
  }
  return sha256_hex(joined).substr(0, 16);
}

std::string to_string(PoolingMode mode) {
  return mode == PoolingMode::kBinary ? "binary" : "tfidf";
}

PoolingMode pooling_mode_from_string(const std::string& s) {
  if (s == "binary") return PoolingMode::kBinary;
  if (s == "tfidf") return PoolingMode::kTfidf;
  throw ArgumentError("unknown pooling mode: " + s);
}

std::string to_string(PoolingSource source) {
  return source == PoolingSource::kTriples ? "triples" : "text";
}

PoolingSource pooling_source_from_string(const std::string& s) {
  if (s == "triples") return PoolingSource::kTriples;
  if (s == "text") return PoolingSource::kText;
  throw ArgumentError("unknown pooling source: " + s);
}

TokenStream triple_token_stream(const ExtractionResult& result) {
  TokenStream stream;
  for (const auto& triple : result.triples) {
    for (const auto* field : {&triple.head, &triple.relation, &triple.tail}) {
      auto tokens = tokenize(*field);
      stream.insert(stream.end(), std::make_move_iterator(tokens.begin()),
                    std::make_move_iterator(tokens.end()));
    }
  }
  return stream;
}

Vocabulary build_vocab(const std::vector<ExtractionResult>& results) {
  std::set<std::string> tokens;
  for (const auto& result : results) {
    for (const auto& token : triple_token_stream(result)) {
      tokens.insert(token);
    }
  }
  if (tokens.empty()) {
    throw EmptyGraphError("no tokens in any triple; cannot build a graph");
  }
  return Vocabulary(std::vector<std::string>(tokens.begin(), tokens.end()));
}

Vocabulary build_vocab_from_streams(std::span<const TokenStream> streams) {
  std::set<std::string> tokens;
  for (const auto& stream : streams) {
    tokens.insert(stream.begin(), stream.end());
  }
  if (tokens.empty()) {
    throw EmptyGraphError("no tokens in any stream; cannot build a vocabulary");
  }
  return Vocabulary(std::vector<std::string>(tokens.begin(), tokens.end()));
}

namespace {

// Normalization with exact symmetry: each undirected pair is assigned one
// computed value, mirrored into both triangles.
SpMat normalize_adjacency(const SpMat& adjacency) {
  const Eigen::Index n = adjacency.rows();
  Eigen::VectorXd degree = adjacency * Eigen::VectorXd::Ones(n);
  Eigen::VectorXd inv_sqrt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree[i] <= 0.0) {
      throw ArgumentError(
          "isolated node makes D^{-1/2} undefined; keep self-loops enabled");
    }
    inv_sqrt[i] = 1.0 / std::sqrt(degree[i]);
  }
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(adjacency.nonZeros()));
  for (int k = 0; k < adjacency.outerSize(); ++k) {
    for (SpMat::InnerIterator it(adjacency, k); it; ++it) {
      if (it.row() > it.col()) continue;
      const double value = it.value() * inv_sqrt[it.row()] * inv_sqrt[it.col()];
      entries.emplace_back(it.row(), it.col(), value);
      if (it.row() != it.col()) {
        entries.emplace_back(it.col(), it.row(), value);
      }
    }
  }
  SpMat normalized(n, n);
  normalized.setFromTriplets(entries.begin(), entries.end());
  normalized.makeCompressed();
  return normalized;
}

}  // namespace

TextGraph build_adjacency(const std::vector<ExtractionResult>& results,
                          Vocabulary vocab, bool self_loops) {
  const auto n = static_cast<Eigen::Index>(vocab.size());
  std::set<std::pair<int, int>> edges;  // i < j
  for (const auto& result : results) {
    for (const auto& triple : result.triples) {
      std::set<int> ids;
      for (const auto* field :
           {&triple.head, &triple.relation, &triple.tail}) {
        for (const auto& token : tokenize(*field)) {
          ids.insert(vocab.id(token));  // throws if the token is missing
        }
      }
      // Clique over the triple's distinct tokens.
      for (auto a = ids.begin(); a != ids.end(); ++a) {
        for (auto b = std::next(a); b != ids.end(); ++b) {
          edges.emplace(*a, *b);
        }
      }
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(edges.size() * 2 + vocab.size());
  for (const auto& [i, j] : edges) {
    entries.emplace_back(i, j, 1.0);
    entries.emplace_back(j, i, 1.0);
  }
  if (self_loops) {
    for (Eigen::Index i = 0; i < n; ++i) entries.emplace_back(i, i, 1.0);
  }

  TextGraph graph;
  graph.vocab = std::move(vocab);
  graph.adjacency = SpMat(n, n);
  graph.adjacency.setFromTriplets(entries.begin(), entries.end(),
                                  [](double, double) { return 1.0; });
  graph.adjacency.makeCompressed();
  graph.norm_adjacency = normalize_adjacency(graph.adjacency);
  graph.edge_count = edges.size();
  graph.self_loops = self_loops;
  return graph;
}

TextGraph identity_graph(Vocabulary vocab) {
  const auto n = static_cast<Eigen::Index>(vocab.size());
  TextGraph graph;
  graph.vocab = std::move(vocab);
  graph.adjacency = SpMat(n, n);
  graph.adjacency.setIdentity();
  graph.norm_adjacency = graph.adjacency;
  graph.edge_count = 0;
  graph.self_loops = true;
  return graph;
}

double tf(const std::string& token, const TokenStream& stream) {
  if (stream.empty()) {
    throw ArgumentError("tf is undefined on an empty stream");
  }
  const auto count = std::count(stream.begin(), stream.end(), token);
  return static_cast<double>(count) / static_cast<double>(stream.size());
}

double idf(const std::string& token, std::span<const TokenStream> streams) {
  if (streams.empty()) {
    throw ArgumentError("idf needs at least one stream");
  }
  std::size_t df = 0;
  for (const auto& stream : streams) {
    if (std::find(stream.begin(), stream.end(), token) != stream.end()) ++df;
  }
  if (df == 0) df = 1;  // floor; callers flag this in the audit counters
  return std::log(static_cast<double>(streams.size()) /
                  static_cast<double>(df));
}

PoolingMatrix build_pooling_streams(const std::vector<TokenStream>& streams,
                                    const Corpus& corpus,
                                    const Vocabulary& vocab,
                                    PoolingMode mode) {
  if (streams.size() != corpus.documents.size()) {
    throw ArgumentError("stream count does not match corpus size");
  }
  PoolingMatrix pooling;
  pooling.mode = mode;
  pooling.doc_ids.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) pooling.doc_ids.push_back(doc.id);

  // In-vocabulary streams; OOV tokens dropped with a counter.
  std::vector<std::vector<int>> id_streams(streams.size());
  for (std::size_t d = 0; d < streams.size(); ++d) {
    id_streams[d].reserve(streams[d].size());
    for (const auto& token : streams[d]) {
      if (auto id = vocab.find(token)) {
        id_streams[d].push_back(*id);
      } else {
        ++pooling.oov_dropped;
      }
    }
  }

  // Document frequencies and |W| from the training split only.
  std::vector<std::int64_t> df(vocab.size(), 0);
  std::size_t train_count = 0;
  for (std::size_t d = 0; d < id_streams.size(); ++d) {
    if (corpus.documents[d].split != Split::kTrain) continue;
    ++train_count;
    std::unordered_set<int> seen(id_streams[d].begin(), id_streams[d].end());
    for (int id : seen) ++df[static_cast<std::size_t>(id)];
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (std::size_t d = 0; d < id_streams.size(); ++d) {
    const auto& ids = id_streams[d];
    if (ids.empty()) continue;
    std::map<int, std::int64_t> counts;
    for (int id : ids) ++counts[id];
    for (const auto& [id, count] : counts) {
      double value = 1.0;
      if (mode == PoolingMode::kTfidf) {
        const double tf_value =
            static_cast<double>(count) / static_cast<double>(ids.size());
        std::int64_t doc_freq = df[static_cast<std::size_t>(id)];
        if (doc_freq == 0) {
          doc_freq = 1;
          ++pooling.idf_floor_hits;
        }
        const double idf_value = std::log(static_cast<double>(train_count) /
                                          static_cast<double>(doc_freq));
        value = tf_value * idf_value;
        if (value == 0.0) continue;  // idf 0: word in every training doc
      }
      entries.emplace_back(static_cast<int>(d), id, value);
    }
  }

  pooling.entries = SpMat(static_cast<Eigen::Index>(corpus.documents.size()),
                          static_cast<Eigen::Index>(vocab.size()));
  pooling.entries.setFromTriplets(entries.begin(), entries.end());
  pooling.entries.makeCompressed();
  return pooling;
}

PoolingMatrix build_pooling(const std::vector<ExtractionResult>& results,
                            const Corpus& corpus, const Vocabulary& vocab,
                            PoolingMode mode, PoolingSource source) {
  std::unordered_map<std::string, const ExtractionResult*> by_id;
  for (const auto& result : results) by_id.emplace(result.doc_id, &result);

  std::vector<TokenStream> streams;
  streams.reserve(corpus.documents.size());
  std::int64_t none_docs = 0;
  for (const auto& doc : corpus.documents) {
    auto it = by_id.find(doc.id);
    if (it == by_id.end()) {
      throw ArgumentError("no extraction result for document " + doc.id);
    }
    const ExtractionResult& result = *it->second;
    if (result.is_none) {
      ++none_docs;
      streams.emplace_back();  // zero row
      continue;
    }
    if (source == PoolingSource::kTriples) {
      streams.push_back(triple_token_stream(result));
    } else {
      streams.push_back(tokenize(doc.display_text()));
    }
  }

  PoolingMatrix pooling = build_pooling_streams(streams, corpus, vocab, mode);
  pooling.source = source;
  pooling.none_docs = none_docs;
  return pooling;
}

namespace {

nlohmann::json sparse_to_coo(const SpMat& m, bool upper_only, bool with_values) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json cols = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SpMat::InnerIterator it(m, k); it; ++it) {
      if (upper_only && it.row() > it.col()) continue;
      rows.push_back(it.row());
      cols.push_back(it.col());
      if (with_values) values.push_back(it.value());
    }
  }
  nlohmann::json out{{"rows", std::move(rows)}, {"cols", std::move(cols)}};
  if (with_values) out["values"] = std::move(values);
  return out;
}

}  // namespace

void save_graph(const GraphArtifact& artifact, const std::filesystem::path& path) {
  nlohmann::json doc{
      {"version", kGraphArtifactVersion},
      {"vocab", artifact.graph.vocab.tokens()},
      {"self_loops", artifact.graph.self_loops},
      {"transductive", artifact.transductive},
      {"adjacency", sparse_to_coo(artifact.graph.adjacency, true, false)},
      {"pooling",
       {{"mode", to_string(artifact.pooling.mode)},
        {"source", to_string(artifact.pooling.source)},
        {"doc_ids", artifact.pooling.doc_ids},
        {"entries", sparse_to_coo(artifact.pooling.entries, false, true)},
        {"oov_dropped", artifact.pooling.oov_dropped},
        {"none_docs", artifact.pooling.none_docs},
        {"idf_floor_hits", artifact.pooling.idf_floor_hits}}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open graph artifact for writing: " + path.string());
  }
  out << doc.dump(2) << '\n';
}

GraphArtifact load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open graph artifact: " + path.string());
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw FormatError("graph artifact is not valid JSON: " + path.string());
  }
  try {
    if (doc.at("version").get<int>() != kGraphArtifactVersion) {
      throw FormatError("unsupported graph artifact version in " +
                        path.string());
    }
    GraphArtifact artifact;
    artifact.transductive = doc.at("transductive").get<bool>();
    artifact.graph.self_loops = doc.at("self_loops").get<bool>();
    artifact.graph.vocab =
        Vocabulary(doc.at("vocab").get<std::vector<std::string>>());
    const auto n = static_cast<Eigen::Index>(artifact.graph.vocab.size());

    const auto& adj = doc.at("adjacency");
    const auto rows = adj.at("rows").get<std::vector<int>>();
    const auto cols = adj.at("cols").get<std::vector<int>>();
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(rows.size() * 2);
    std::size_t off_diagonal = 0;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      entries.emplace_back(rows[k], cols[k], 1.0);
      if (rows[k] != cols[k]) {
        entries.emplace_back(cols[k], rows[k], 1.0);
        ++off_diagonal;
      }
    }
    artifact.graph.adjacency = SpMat(n, n);
    artifact.graph.adjacency.setFromTriplets(entries.begin(), entries.end(),
                                             [](double, double) { return 1.0; });
    artifact.graph.adjacency.makeCompressed();
    artifact.graph.norm_adjacency = normalize_adjacency(artifact.graph.adjacency);
    artifact.graph.edge_count = off_diagonal;

    const auto& pooling = doc.at("pooling");
    artifact.pooling.mode =
        pooling_mode_from_string(pooling.at("mode").get<std::string>());
    artifact.pooling.source =
        pooling_source_from_string(pooling.at("source").get<std::string>());
    artifact.pooling.doc_ids =
        pooling.at("doc_ids").get<std::vector<std::string>>();
    artifact.pooling.oov_dropped = pooling.at("oov_dropped").get<std::int64_t>();
    artifact.pooling.none_docs = pooling.at("none_docs").get<std::int64_t>();
    artifact.pooling.idf_floor_hits =
        pooling.at("idf_floor_hits").get<std::int64_t>();
    const auto& coo = pooling.at("entries");
    const auto srows = coo.at("rows").get<std::vector<int>>();
    const auto scols = coo.at("cols").get<std::vector<int>>();
    const auto svalues = coo.at("values").get<std::vector<double>>();
    std::vector<Eigen::Triplet<double>> sentries;
    sentries.reserve(srows.size());
    for (std::size_t k = 0; k < srows.size(); ++k) {
      sentries.emplace_back(srows[k], scols[k], svalues[k]);
    }
    artifact.pooling.entries =
        SpMat(static_cast<Eigen::Index>(artifact.pooling.doc_ids.size()), n);
    artifact.pooling.entries.setFromTriplets(sentries.begin(), sentries.end());
    artifact.pooling.entries.makeCompressed();
    return artifact;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad graph artifact " + path.string() + ": " + e.what());
  }
}

}  // namespace graphtext
