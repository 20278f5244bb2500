#pragma once

#include <Eigen/SparseCore>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphtext/corpus.hpp"
#include "graphtext/tokenize.hpp"
#include "graphtext/tripleparse.hpp"

namespace graphtext {

using SpMat = Eigen::SparseMatrix<double>;
using TokenStream = std::vector<std::string>;

/// Bijection between the distinct triple tokens and node ids 0..|V|-1.
/// Tokens are stored sorted for determinism.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> sorted_unique_tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const { return tokens_.at(id); }
  std::optional<int> find(const std::string& token) const;
  int id(const std::string& token) const;  // throws on missing token
  std::string digest() const;
  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Word graph: symmetric 0/1 adjacency with self-loops and its symmetric
/// normalization D^{-1/2} A D^{-1/2}.
struct TextGraph {
  Vocabulary vocab;
  SpMat adjacency;        // |V| x |V|, entries exactly 0 or 1
  SpMat norm_adjacency;   // same support, entries in (0, 1]
  std::size_t edge_count = 0;  // undirected off-diagonal edges
  bool self_loops = true;
};

enum class PoolingMode { kBinary, kTfidf };
enum class PoolingSource { kTriples, kText };

std::string to_string(PoolingMode mode);
PoolingMode pooling_mode_from_string(const std::string& s);
std::string to_string(PoolingSource source);
PoolingSource pooling_source_from_string(const std::string& s);

/// Document-by-word pooling matrix S plus audit counters from its build.
struct PoolingMatrix {
  std::vector<std::string> doc_ids;  // corpus order
  SpMat entries;                     // |W| x |V|
  PoolingMode mode = PoolingMode::kBinary;
  PoolingSource source = PoolingSource::kTriples;
  std::int64_t oov_dropped = 0;
  std::int64_t none_docs = 0;
  std::int64_t idf_floor_hits = 0;
};

/// Token stream of one extraction result: tokenized head, relation, tail of
/// each triple, concatenated in order.
TokenStream triple_token_stream(const ExtractionResult& result);

/// Sorted distinct tokens over all triple fields of all results.
/// Throws EmptyGraphError when no tokens survive.
Vocabulary build_vocab(const std::vector<ExtractionResult>& results);
Vocabulary build_vocab_from_streams(std::span<const TokenStream> streams);

/// One clique per triple over its distinct tokens, then self-loops for every
/// node. With self_loops = false, an isolated node makes the normalization
/// undefined and raises ArgumentError instead.
TextGraph build_adjacency(const std::vector<ExtractionResult>& results,
                          Vocabulary vocab, bool self_loops = true);

/// Edgeless graph (self-loops only), so norm_adjacency = I. This is the
/// adjacency under which the classifier reduces to plain logistic
/// regression on the pooling features.
TextGraph identity_graph(Vocabulary vocab);

/// Exact formula values, natural logarithm.
double tf(const std::string& token, const TokenStream& stream);
double idf(const std::string& token, std::span<const TokenStream> streams);

/// Builds S over the corpus (rows in corpus order). Streams come from each
/// document's triples (default) or from its display text intersected with
/// the vocabulary. TF-IDF statistics (df, |W|) are fit on training streams
/// only; test rows use the frozen idf. Out-of-vocabulary tokens are dropped
/// and counted. is_none documents get an all-zero row.
PoolingMatrix build_pooling(const std::vector<ExtractionResult>& results,
                            const Corpus& corpus, const Vocabulary& vocab,
                            PoolingMode mode,
                            PoolingSource source = PoolingSource::kTriples);

/// Same, over caller-supplied per-document token streams (corpus order).
PoolingMatrix build_pooling_streams(const std::vector<TokenStream>& streams,
                                    const Corpus& corpus,
                                    const Vocabulary& vocab, PoolingMode mode);

/// Graph artifact: JSON container with the vocabulary, COO triplets of A,
/// and S in COO with its mode tag. Round-trip lossless.
struct GraphArtifact {
  TextGraph graph;
  PoolingMatrix pooling;
  bool transductive = false;
};

void save_graph(const GraphArtifact& artifact, const std::filesystem::path& path);
GraphArtifact load_graph(const std::filesystem::path& path);

}  // namespace graphtext
