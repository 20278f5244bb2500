#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <set>

#include "graphtext/errors.hpp"
#include "graphtext/graph.hpp"
#include "test_util.hpp"

using namespace graphtext;

namespace {

ExtractionResult result_with(std::string doc_id,
                             std::vector<Triple> triples) {
  return ExtractionResult{std::move(doc_id), std::move(triples), false, 0};
}

Corpus tiny_corpus(const std::vector<std::pair<std::string, Split>>& docs) {
  Corpus corpus;
  corpus.labels = LabelSet({"x", "y"});
  for (const auto& [id, split] : docs) {
    corpus.documents.push_back(Document{
        id, "placeholder text here", std::nullopt, split,
        split == Split::kTrain ? std::optional<std::string>("x") : std::nullopt});
  }
  return corpus;
}

std::vector<ExtractionResult> random_results(std::mt19937_64& rng, int docs,
                                             int vocab_size) {
  std::vector<std::string> words;
  for (int i = 0; i < vocab_size; ++i) words.push_back("w" + std::to_string(i));
  std::vector<ExtractionResult> results;
  for (int d = 0; d < docs; ++d) {
    std::vector<Triple> triples;
    const auto n_triples = 1 + rng() % 4;
    for (std::size_t t = 0; t < n_triples; ++t) {
      triples.push_back(Triple{words[rng() % words.size()],
                               words[rng() % words.size()],
                               words[rng() % words.size()]});
    }
    results.push_back(result_with("d" + std::to_string(d), std::move(triples)));
  }
  return results;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("case 1 vocabulary is the token union") {
  const auto r = result_with(
      "c1", {Triple{"Bank of France", "maintain", "intervention rate"}});
  const Vocabulary vocab = build_vocab({r});
  CHECK(vocab.size() == 6);
  CHECK(vocab.tokens() == std::vector<std::string>{"bank", "france",
                                                   "intervention", "maintain",
                                                   "of", "rate"});
}

TEST_CASE("duplicate triples do not change the vocabulary") {
  const Triple t{"a b", "c", "d"};
  const auto once = build_vocab({result_with("d1", {t})});
  const auto twice = build_vocab({result_with("d1", {t, t}),
                                  result_with("d2", {t})});
  CHECK(once.tokens() == twice.tokens());
}

TEST_CASE("shared words appear once") {
  const auto vocab = build_vocab(
      {result_with("d1", {Triple{"rate", "x", "y"}}),
       result_with("d2", {Triple{"rate", "z", "w"}})});
  CHECK(std::count(vocab.tokens().begin(), vocab.tokens().end(), "rate") == 1);
}

TEST_CASE("empty extraction set is an empty-graph error") {
  CHECK_THROWS_AS(build_vocab({}), EmptyGraphError);
  CHECK_THROWS_AS(build_vocab({ExtractionResult{"d", {}, true, 0}}),
                  EmptyGraphError);
}

TEST_CASE("one triple with four tokens makes a clique") {
  const auto r = result_with("d", {Triple{"a b", "c", "d"}});
  const TextGraph graph = build_adjacency({r}, build_vocab({r}));

  // Brute-force oracle: C(4,2) unordered pairs.
  std::set<std::pair<int, int>> expected;
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) expected.emplace(i, j);
  }
  CHECK(graph.edge_count == expected.size());
  CHECK(graph.adjacency.nonZeros() ==
        static_cast<Eigen::Index>(expected.size() * 2 + 4));
  for (const auto& [i, j] : expected) {
    CHECK(graph.adjacency.coeff(i, j) == 1.0);
    CHECK(graph.adjacency.coeff(j, i) == 1.0);
  }
  for (int i = 0; i < 4; ++i) CHECK(graph.adjacency.coeff(i, i) == 1.0);
}

TEST_CASE("two-node normalization: all entries one half") {
  const auto r = result_with("d", {Triple{"x", "x", "y"}});
  const TextGraph graph = build_adjacency({r}, build_vocab({r}));
  REQUIRE(graph.vocab.size() == 2);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      CHECK(graph.norm_adjacency.coeff(i, j) == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("isolated node keeps a unit self-loop") {
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"solo", "solo", "solo"}}),
      result_with("d2", {Triple{"a", "b", "c"}})};
  const TextGraph graph = build_adjacency(results, build_vocab(results));
  const int solo = graph.vocab.id("solo");
  CHECK(graph.adjacency.coeff(solo, solo) == 1.0);
  CHECK(graph.norm_adjacency.coeff(solo, solo) == 1.0);
}

TEST_CASE("no-self-loop mode rejects isolated nodes") {
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"solo", "solo", "solo"}})};
  CHECK_THROWS_AS(build_adjacency(results, build_vocab(results), false),
                  ArgumentError);
  // With real edges everywhere it works, and diag(A) stays empty.
  const auto connected = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"a", "b", "c"}})};
  const TextGraph graph =
      build_adjacency(connected, build_vocab(connected), false);
  CHECK(graph.adjacency.coeff(0, 0) == 0.0);
}

TEST_CASE("duplicate triple leaves A and binary S unchanged") {
  const Triple t{"p q", "r", "s"};
  const auto once = std::vector<ExtractionResult>{result_with("d1", {t})};
  const auto twice = std::vector<ExtractionResult>{result_with("d1", {t, t})};
  const Corpus corpus = tiny_corpus({{"d1", Split::kTrain}, {"t1", Split::kTest}});
  auto with_t1 = [](std::vector<ExtractionResult> rs) {
    rs.push_back(ExtractionResult{"t1", {}, true, 0});
    return rs;
  };

  const auto g1 = build_adjacency(once, build_vocab(once));
  const auto g2 = build_adjacency(twice, build_vocab(twice));
  CHECK(g1.adjacency.nonZeros() == g2.adjacency.nonZeros());
  CHECK((g1.adjacency - g2.adjacency).norm() == 0.0);
  CHECK((g1.norm_adjacency - g2.norm_adjacency).norm() == 0.0);

  const auto s1 = build_pooling(with_t1(once), corpus, g1.vocab, PoolingMode::kBinary);
  const auto s2 = build_pooling(with_t1(twice), corpus, g2.vocab, PoolingMode::kBinary);
  CHECK((s1.entries - s2.entries).norm() == 0.0);
}

TEST_CASE("normalized adjacency is symmetric with spectrum in [-1, 1]") {
  std::mt19937_64 rng(4242);
  for (int round = 0; round < 10; ++round) {
    const auto results = random_results(rng, 4, 8 + static_cast<int>(rng() % 6));
    const TextGraph graph = build_adjacency(results, build_vocab(results));
    const Eigen::MatrixXd dense(graph.norm_adjacency);
    CHECK((dense - dense.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    CHECK(solver.eigenvalues().minCoeff() >= -1.0 - 1e-9);
    CHECK(solver.eigenvalues().maxCoeff() <= 1.0 + 1e-9);
  }
}

TEST_CASE("diagonal of the normalization is the inverse degree") {
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"a", "b", "c"}, Triple{"c", "d", "e"}})};
  const TextGraph graph = build_adjacency(results, build_vocab(results));
  const Eigen::VectorXd degree =
      graph.adjacency * Eigen::VectorXd::Ones(graph.adjacency.rows());
  for (Eigen::Index i = 0; i < degree.size(); ++i) {
    CHECK(graph.norm_adjacency.coeff(i, i) ==
          doctest::Approx(1.0 / degree[i]).epsilon(1e-12));
  }
}

TEST_CASE("tf and idf formulas") {
  const TokenStream stream{"rate", "cut", "rate", "bank"};
  CHECK(tf("rate", stream) == 0.5);
  CHECK(tf("cut", stream) == 0.25);
  CHECK(tf("missing", stream) == 0.0);
  CHECK_THROWS_AS(tf("x", TokenStream{}), ArgumentError);

  const std::vector<TokenStream> streams{{"rate", "cut"}, {"rate", "hike"}};
  CHECK(idf("rate", streams) == 0.0);
  CHECK(idf("cut", streams) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

  const std::vector<TokenStream> four{{"a"}, {"b"}, {"c"}, {"a", "d"}};
  CHECK(idf("d", four) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
}

TEST_CASE("tfidf pooling matches the direct formula") {
  // Stream for d1 is [interest, rate, hit, rate]: tf(rate) = 0.5 and rate
  // appears in 1 of 2 training docs.
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"interest rate", "hit", "rate"}}),
      result_with("d2", {Triple{"bank", "cut", "costs"}}),
      ExtractionResult{"t1", {}, true, 0}};
  const Corpus corpus = tiny_corpus(
      {{"d1", Split::kTrain}, {"d2", Split::kTrain}, {"t1", Split::kTest}});
  const Vocabulary vocab = build_vocab(results);
  const auto pooling =
      build_pooling(results, corpus, vocab, PoolingMode::kTfidf);

  const double expected = 0.5 * std::log(2.0 / 1.0);
  CHECK(pooling.entries.coeff(0, vocab.id("rate")) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(pooling.none_docs == 1);
}

TEST_CASE("word in every training document pools to zero") {
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"common", "x", "y"}}),
      result_with("d2", {Triple{"common", "z", "w"}})};
  const Corpus corpus =
      tiny_corpus({{"d1", Split::kTrain}, {"d2", Split::kTrain}});
  const Vocabulary vocab = build_vocab(results);
  const auto pooling =
      build_pooling(results, corpus, vocab, PoolingMode::kTfidf);
  CHECK(pooling.entries.coeff(0, vocab.id("common")) == 0.0);
  CHECK(pooling.entries.coeff(1, vocab.id("common")) == 0.0);
  // The same build in binary mode keeps the word.
  const auto binary =
      build_pooling(results, corpus, vocab, PoolingMode::kBinary);
  CHECK(binary.entries.coeff(0, vocab.id("common")) == 1.0);
}

TEST_CASE("binary pooling entries are exactly zero or one") {
  std::mt19937_64 rng(7);
  const auto results = random_results(rng, 5, 10);
  std::vector<std::pair<std::string, Split>> docs;
  for (int i = 0; i < 5; ++i) {
    docs.emplace_back("d" + std::to_string(i),
                      i < 4 ? Split::kTrain : Split::kTest);
  }
  const Corpus corpus = tiny_corpus(docs);
  const auto pooling = build_pooling(results, corpus, build_vocab(results),
                                     PoolingMode::kBinary);
  for (int k = 0; k < pooling.entries.outerSize(); ++k) {
    for (SpMat::InnerIterator it(pooling.entries, k); it; ++it) {
      CHECK(it.value() == 1.0);
    }
  }
}

TEST_CASE("is_none documents get an all-zero row") {
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"a", "b", "c"}}),
      ExtractionResult{"t1", {}, true, 0}};
  const Corpus corpus = tiny_corpus({{"d1", Split::kTrain}, {"t1", Split::kTest}});
  const auto pooling = build_pooling(results, corpus, build_vocab(results),
                                     PoolingMode::kBinary);
  const SpMat none_row(pooling.entries.middleRows(1, 1));
  CHECK(none_row.nonZeros() == 0);
  CHECK(pooling.none_docs == 1);
}

TEST_CASE("missing document is an argument error") {
  const auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"a", "b", "c"}})};
  const Corpus corpus = tiny_corpus({{"d1", Split::kTrain}, {"t1", Split::kTest}});
  CHECK_THROWS_AS(build_pooling(results, corpus, build_vocab(results),
                                PoolingMode::kBinary),
                  ArgumentError);
}

TEST_CASE("out-of-vocabulary test tokens are dropped and counted") {
  const auto train = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"a", "b", "c"}})};
  auto all = train;
  all.push_back(result_with("t1", {Triple{"a", "unseen", "c"}}));
  const Corpus corpus = tiny_corpus({{"d1", Split::kTrain}, {"t1", Split::kTest}});
  const Vocabulary vocab = build_vocab(train);  // inductive: train only
  const auto pooling = build_pooling(all, corpus, vocab, PoolingMode::kBinary);
  CHECK(pooling.oov_dropped == 1);
  CHECK(pooling.entries.coeff(1, vocab.id("a")) == 1.0);
}

TEST_CASE("text pooling source uses the display text") {
  auto results = std::vector<ExtractionResult>{
      result_with("d1", {Triple{"placeholder", "x", "y"}}),
      result_with("t1", {Triple{"placeholder", "x", "y"}})};
  Corpus corpus = tiny_corpus({{"d1", Split::kTrain}, {"t1", Split::kTest}});
  corpus.documents[0].raw_text = "placeholder only";
  corpus.documents[1].raw_text = "placeholder text";
  const Vocabulary vocab = build_vocab(results);
  const auto pooling = build_pooling(results, corpus, vocab,
                                     PoolingMode::kBinary, PoolingSource::kText);
  // "only"/"text" are not vocabulary words; "x"/"y" are not in the text.
  CHECK(pooling.entries.coeff(0, vocab.id("placeholder")) == 1.0);
  CHECK(pooling.entries.coeff(0, vocab.id("x")) == 0.0);
  CHECK(pooling.oov_dropped == 2);
  CHECK(pooling.source == PoolingSource::kText);
}

TEST_CASE("graph artifact round trip is lossless") {
  gttest::TempDir dir;
  std::mt19937_64 rng(11);
  const auto results = random_results(rng, 4, 9);
  std::vector<std::pair<std::string, Split>> docs;
  for (int i = 0; i < 4; ++i) {
    docs.emplace_back("d" + std::to_string(i),
                      i < 3 ? Split::kTrain : Split::kTest);
  }
  const Corpus corpus = tiny_corpus(docs);
  GraphArtifact artifact;
  artifact.graph = build_adjacency(results, build_vocab(results));
  artifact.pooling = build_pooling(results, corpus, artifact.graph.vocab,
                                   PoolingMode::kTfidf);
  artifact.transductive = true;
  save_graph(artifact, dir.file("g.json"));
  const GraphArtifact reloaded = load_graph(dir.file("g.json"));

  CHECK(reloaded.graph.vocab == artifact.graph.vocab);
  CHECK(reloaded.transductive);
  CHECK(reloaded.graph.edge_count == artifact.graph.edge_count);
  CHECK((reloaded.graph.adjacency - artifact.graph.adjacency).norm() == 0.0);
  CHECK((reloaded.graph.norm_adjacency - artifact.graph.norm_adjacency).norm() ==
        0.0);
  CHECK((reloaded.pooling.entries - artifact.pooling.entries).norm() == 0.0);
  CHECK(reloaded.pooling.mode == artifact.pooling.mode);
  CHECK(reloaded.pooling.doc_ids == artifact.pooling.doc_ids);
}

}  // TEST_SUITE
