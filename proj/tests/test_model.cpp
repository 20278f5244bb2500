#include <doctest.h>

#include <cmath>
#include <random>

#include "graphtext/errors.hpp"
#include "graphtext/harness.hpp"
#include "graphtext/llm_client.hpp"
#include "graphtext/model.hpp"
#include "graphtext/tripleparse.hpp"
#include "test_util.hpp"

using namespace graphtext;

namespace {

// Shared toy factory: mock-extract the bundled separable corpora.
struct Pipeline {
  Corpus corpus;
  std::vector<ExtractionResult> results;
};

Pipeline load_toy(const std::string& name) {
  const auto dir = gttest::fixtures_dir() / name;
  Pipeline p;
  p.corpus = load_corpus(dir / "texts.txt", dir / "meta.tsv");
  for (const auto& doc : p.corpus.documents) {
    p.results.push_back(parse_triples(mock_extract(doc.raw_text, 3), doc.id));
  }
  return p;
}

struct RandomInstance {
  TextGraph graph;
  PoolingMatrix pooling;
  Corpus corpus;
  Eigen::MatrixXd weights;
  std::vector<int> targets;
};

RandomInstance random_instance(std::mt19937_64& rng, int max_words,
                               int max_docs, int max_classes) {
  const int n_words = 3 + static_cast<int>(rng() % (max_words - 2));
  const int n_docs = 2 + static_cast<int>(rng() % (max_docs - 1));
  const int n_classes = 2 + static_cast<int>(rng() % (max_classes - 1));

  std::vector<std::string> words;
  for (int i = 0; i < n_words; ++i) words.push_back("w" + std::to_string(i));

  std::vector<ExtractionResult> results;
  std::vector<std::string> labels;
  for (int c = 0; c < n_classes; ++c) labels.push_back("c" + std::to_string(c));

  RandomInstance inst;
  inst.corpus.labels = LabelSet(labels);
  for (int d = 0; d < n_docs; ++d) {
    std::vector<Triple> triples;
    const auto n_triples = 1 + rng() % 3;
    for (std::size_t t = 0; t < n_triples; ++t) {
      triples.push_back(Triple{words[rng() % words.size()],
                               words[rng() % words.size()],
                               words[rng() % words.size()]});
    }
    const std::string id = "d" + std::to_string(d);
    results.push_back(ExtractionResult{id, triples, false, 0});
    const bool is_train = d + 1 < n_docs;  // keep one test doc
    inst.corpus.documents.push_back(Document{
        id, "text", std::nullopt, is_train ? Split::kTrain : Split::kTest,
        labels[rng() % labels.size()]});
  }
  Vocabulary vocab = build_vocab(results);
  inst.graph = build_adjacency(results, std::move(vocab));
  inst.pooling =
      build_pooling(results, inst.corpus, inst.graph.vocab,
                    rng() % 2 == 0 ? PoolingMode::kBinary : PoolingMode::kTfidf);
  inst.targets = training_targets(inst.corpus, inst.pooling);

  std::normal_distribution<double> normal(0.0, 1.0);
  inst.weights.resize(inst.graph.vocab.size(), n_classes);
  for (Eigen::Index i = 0; i < inst.weights.rows(); ++i) {
    for (Eigen::Index j = 0; j < inst.weights.cols(); ++j) {
      inst.weights(i, j) = normal(rng);
    }
  }
  return inst;
}

double finite_difference_max_rel_error(const RandomInstance& inst,
                                       double l2_weight) {
  const double h = 1e-5;
  const Eigen::MatrixXd analytic =
      gradient(inst.graph, inst.pooling, inst.weights, inst.targets, l2_weight);
  double max_rel = 0.0;
  Eigen::MatrixXd w = inst.weights;
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double original = w(i, j);
      w(i, j) = original + h;
      const double up = loss(forward(inst.graph, inst.pooling, w),
                             inst.targets, l2_weight, w);
      w(i, j) = original - h;
      const double down = loss(forward(inst.graph, inst.pooling, w),
                               inst.targets, l2_weight, w);
      w(i, j) = original;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-6});
      max_rel = std::max(max_rel, std::abs(numeric - analytic(i, j)) / denom);
    }
  }
  return max_rel;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("zero weights give the uniform distribution") {
  auto toy = load_toy("toy4");
  const TextGraph graph =
      build_adjacency(toy.results, build_vocab(toy.results));
  const auto pooling = build_pooling(toy.results, toy.corpus, graph.vocab,
                                     PoolingMode::kBinary);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(graph.vocab.size(), 4);
  const Eigen::MatrixXd probs = forward(graph, pooling, w);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      CHECK(probs(i, c) == doctest::Approx(0.25).epsilon(1e-12));
    }
  }
}

TEST_CASE("single word, unit self-loop: scalar softmax") {
  const std::vector<ExtractionResult> results{
      ExtractionResult{"d", {Triple{"solo", "solo", "solo"}}, false, 0}};
  Corpus corpus;
  corpus.labels = LabelSet({"a", "b"});
  corpus.documents.push_back(
      Document{"d", "solo", std::nullopt, Split::kTrain, "a"});
  const TextGraph graph = build_adjacency(results, build_vocab(results));
  const auto pooling =
      build_pooling(results, corpus, graph.vocab, PoolingMode::kBinary);
  Eigen::MatrixXd w(1, 2);
  w << 1.0, 0.0;
  const Eigen::MatrixXd probs = forward(graph, pooling, w);
  CHECK(probs(0, 0) == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(probs(0, 1) == doctest::Approx(0.2689).epsilon(1e-4));
}

TEST_CASE("duplicated pooling row gives an identical probability row") {
  auto toy = load_toy("toy2");
  const TextGraph graph =
      build_adjacency(toy.results, build_vocab(toy.results));
  auto pooling = build_pooling(toy.results, toy.corpus, graph.vocab,
                               PoolingMode::kBinary);
  // Duplicate row 0 by stacking S on itself.
  SpMat duplicated(pooling.entries.rows() + 1, pooling.entries.cols());
  std::vector<Eigen::Triplet<double>> entries;
  for (int k = 0; k < pooling.entries.outerSize(); ++k) {
    for (SpMat::InnerIterator it(pooling.entries, k); it; ++it) {
      entries.emplace_back(it.row(), it.col(), it.value());
      if (it.row() == 0) {
        entries.emplace_back(pooling.entries.rows(), it.col(), it.value());
      }
    }
  }
  duplicated.setFromTriplets(entries.begin(), entries.end());
  pooling.entries = duplicated;
  pooling.doc_ids.push_back("copy-of-first");

  Eigen::MatrixXd w = Eigen::MatrixXd::Random(graph.vocab.size(), 2);
  const Eigen::MatrixXd probs = forward(graph, pooling, w);
  CHECK((probs.row(0) - probs.row(probs.rows() - 1)).norm() == 0.0);
}

TEST_CASE("loss values") {
  Eigen::MatrixXd uniform(3, 4);
  uniform.setConstant(0.25);
  const std::vector<int> targets{0, 2, 3};
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 4);
  CHECK(loss(uniform, targets, 0.0, w) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));

  Eigen::MatrixXd perfect(2, 2);
  perfect << 1.0, 0.0, 0.0, 1.0;
  CHECK(loss(perfect, {0, 1}, 0.0, w) == doctest::Approx(0.0).epsilon(1e-12));

  Eigen::MatrixXd mixed(2, 2);
  mixed << 0.5, 0.5, 0.25, 0.75;
  CHECK(loss(mixed, {0, 0}, 0.0, w) ==
        doctest::Approx((std::log(2.0) + std::log(4.0)) / 2.0).epsilon(1e-12));

  // Unlabeled rows are excluded.
  CHECK(loss(mixed, {0, -1}, 0.0, w) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // L2 term.
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Ones(2, 2);
  CHECK(loss(perfect, {0, 1}, 0.5, w2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 rng(321);
  for (int round = 0; round < 5; ++round) {
    const auto inst = random_instance(rng, 10, 6, 3);
    const double l2 = round % 2 == 0 ? 0.0 : 0.01;
    CHECK(finite_difference_max_rel_error(inst, l2) < 1e-5);
  }
}

TEST_CASE("balanced two-class gradient at zero weights is antisymmetric") {
  const std::vector<ExtractionResult> results{
      ExtractionResult{"d1", {Triple{"a", "b", "c"}}, false, 0},
      ExtractionResult{"d2", {Triple{"a", "b", "c"}}, false, 0}};
  Corpus corpus;
  corpus.labels = LabelSet({"x", "y"});
  corpus.documents.push_back(Document{"d1", "t", std::nullopt, Split::kTrain, "x"});
  corpus.documents.push_back(Document{"d2", "t", std::nullopt, Split::kTrain, "y"});
  const TextGraph graph = build_adjacency(results, build_vocab(results));
  const auto pooling =
      build_pooling(results, corpus, graph.vocab, PoolingMode::kBinary);
  const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(graph.vocab.size(), 2);
  const auto grad =
      gradient(graph, pooling, w, training_targets(corpus, pooling), 0.0);
  CHECK((grad.col(0) + grad.col(1)).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("saturated correct classification has a vanishing gradient") {
  auto toy = load_toy("toy2");
  const TextGraph graph =
      build_adjacency(toy.results, build_vocab(toy.results));
  const auto pooling = build_pooling(toy.results, toy.corpus, graph.vocab,
                                     PoolingMode::kBinary);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(graph.vocab.size(), 2);
  w(graph.vocab.id("alpha"), 0) = 50.0;
  w(graph.vocab.id("beta"), 1) = 50.0;
  const auto grad =
      gradient(graph, pooling, w, training_targets(toy.corpus, pooling), 0.0);
  CHECK(grad.norm() < 1e-8);
}

TEST_CASE("training on the separable toy reaches full train accuracy") {
  auto toy = load_toy("toy2");
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{},
                            TrainConfig{});
  CHECK(accuracy(run.predictions, toy.corpus, Split::kTrain) == 1.0);
  CHECK(run.test_accuracy == 1.0);
}

TEST_CASE("training is deterministic") {
  auto toy = load_toy("toy4");
  const auto a = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  const auto b = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  REQUIRE(a.model.loss_trace.size() == b.model.loss_trace.size());
  for (std::size_t i = 0; i < a.model.loss_trace.size(); ++i) {
    CHECK(a.model.loss_trace[i].loss == b.model.loss_trace[i].loss);
  }
  CHECK((a.model.weights - b.model.weights).norm() == 0.0);
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    CHECK(a.predictions[i].label == b.predictions[i].label);
    CHECK((a.predictions[i].probs - b.predictions[i].probs).norm() == 0.0);
  }
}

TEST_CASE("loss trace is monotone non-increasing at the default rate") {
  auto toy = load_toy("toy4");
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  for (std::size_t i = 1; i < run.model.loss_trace.size(); ++i) {
    CHECK(run.model.loss_trace[i].loss <= run.model.loss_trace[i - 1].loss);
  }
}

TEST_CASE("zero learning rate leaves weights at zero and loss at ln n") {
  auto toy = load_toy("toy2");
  TrainConfig config;
  config.learning_rate = 0.0;
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, config);
  CHECK(run.model.weights.norm() == 0.0);
  for (const auto& row : run.model.loss_trace) {
    CHECK(row.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("zero epochs keep the uniform model") {
  auto toy = load_toy("toy2");
  TrainConfig config;
  config.max_epochs = 0;
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, config);
  CHECK(run.model.weights.norm() == 0.0);
  REQUIRE(run.model.loss_trace.size() == 1);
}

TEST_CASE("exploding configuration raises a training error") {
  auto toy = load_toy("toy2");
  TrainConfig config;
  config.learning_rate = 1e200;  // one step overflows the L2 term
  config.l2_weight = 1.0;
  CHECK_THROWS_AS(full_run(toy.corpus, toy.results, HarnessOptions{}, config),
                  TrainingError);
}

TEST_CASE("an overshooting rate stops on the tolerance rule instead") {
  auto toy = load_toy("toy2");
  TrainConfig config;
  config.learning_rate = 1e3;
  config.l2_weight = 10.0;
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, config);
  CHECK(run.model.loss_trace.size() < 10);  // loss increase halts training
}

TEST_CASE("invalid configurations are rejected") {
  TrainConfig config;
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(config.validate(), ArgumentError);
  config = TrainConfig{};
  config.validation_fraction = 1.0;
  CHECK_THROWS_AS(config.validate(), ArgumentError);
  config = TrainConfig{};
  config.tolerance = 0.0;
  CHECK_THROWS_AS(config.validate(), ArgumentError);
}

TEST_CASE("validation early stopping records val_acc and keeps a useful model") {
  // A corpus large enough that the hash-carved validation subset spans the
  // classes; a toy with three docs per class can lose a whole class to the
  // carve, which legitimately freezes training at epoch zero.
  const auto dir = gttest::data_dir() / "synthetic";
  Corpus corpus = load_corpus(dir / "texts.txt", dir / "meta.tsv");
  corpus = subsample_train(corpus, 200, 1);
  std::vector<ExtractionResult> results;
  for (const auto& doc : corpus.documents) {
    results.push_back(parse_triples(mock_extract(doc.raw_text, 3), doc.id));
  }
  TrainConfig config;
  config.validation_fraction = 0.1;
  const auto run = full_run(corpus, results, HarnessOptions{}, config);
  REQUIRE_FALSE(run.model.loss_trace.empty());
  CHECK(run.model.loss_trace.front().val_acc.has_value());
  CHECK(run.model.loss_trace.back().val_acc.has_value());
  CHECK(run.test_accuracy > 0.5);
  CHECK(run.model.weights.norm() > 0.0);
}

TEST_CASE("model artifact round trips bit-exactly") {
  gttest::TempDir dir;
  auto toy = load_toy("toy2");
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  save_model(run.model, dir.file("m.json"));
  const ClassifierModel reloaded = load_model(dir.file("m.json"));
  CHECK(reloaded.vocab == run.model.vocab);
  CHECK(reloaded.labels == run.model.labels);
  CHECK((reloaded.weights - run.model.weights).norm() == 0.0);
  CHECK(reloaded.config_digest == run.model.config_digest);
  REQUIRE(reloaded.loss_trace.size() == run.model.loss_trace.size());
  CHECK(reloaded.loss_trace.back().loss == run.model.loss_trace.back().loss);

  const auto before = predict(run.model, run.graph, run.pooling);
  const auto after = predict(reloaded, run.graph, run.pooling);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(before[i].label == after[i].label);
    CHECK((before[i].probs - after[i].probs).norm() == 0.0);
  }
}

TEST_CASE("all-OOV document predicts class zero by the tie rule") {
  auto toy = load_toy("toy2");
  const TextGraph graph =
      build_adjacency(toy.results, build_vocab(toy.results));
  auto results = toy.results;
  // Re-point the last test doc at an unseen word so its row is empty.
  Corpus corpus = toy.corpus;
  corpus.documents.push_back(Document{"oov-doc", "zzz zzz zzz", std::nullopt,
                                      Split::kTest, "beta"});
  results.push_back(
      ExtractionResult{"oov-doc", {Triple{"zzz", "zzz", "zzz"}}, false, 0});
  const auto pooling =
      build_pooling(results, corpus, graph.vocab, PoolingMode::kBinary);
  const auto model = train(graph, pooling, corpus, TrainConfig{});
  const auto predictions = predict(model, graph, pooling);
  const auto& last = predictions.back();
  CHECK(last.doc_id == "oov-doc");
  CHECK(last.class_index == 0);
  CHECK(last.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("unseen document containing alpha lands in the alpha class") {
  auto toy = load_toy("toy2");
  Corpus corpus = toy.corpus;
  auto results = toy.results;
  corpus.documents.push_back(Document{"new-doc", "alpha alpha alpha alpha",
                                      std::nullopt, Split::kTest, "alpha"});
  results.push_back(parse_triples(mock_extract("alpha alpha alpha alpha", 3),
                                  "new-doc"));
  const auto run = full_run(corpus, results, HarnessOptions{}, TrainConfig{});
  CHECK(run.predictions.back().doc_id == "new-doc");
  CHECK(run.predictions.back().label == "alpha");
}

TEST_CASE("vocabulary mismatch raises a compatibility error naming digests") {
  auto toy2 = load_toy("toy2");
  auto toy4 = load_toy("toy4");
  const auto run2 = full_run(toy2.corpus, toy2.results, HarnessOptions{}, TrainConfig{});
  const auto run4 = full_run(toy4.corpus, toy4.results, HarnessOptions{}, TrainConfig{});
  try {
    predict(run2.model, run4.graph, run4.pooling);
    FAIL("expected CompatibilityError");
  } catch (const CompatibilityError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(run2.model.vocab.digest()) != std::string::npos);
    CHECK(msg.find(run4.graph.vocab.digest()) != std::string::npos);
  }
}

TEST_CASE("adding a constant to one logit row leaves its softmax unchanged") {
  Eigen::MatrixXd logits(2, 3);
  logits << 1.0, 2.0, 3.0, -1.0, 0.5, 2.0;
  Eigen::MatrixXd shifted = logits;
  shifted.row(0).array() += 17.0;
  softmax_rows(logits);
  softmax_rows(shifted);
  CHECK((logits.row(0) - shifted.row(0)).norm() < 1e-15);
}

TEST_CASE("scaling the pooling matrix preserves every argmax") {
  auto toy = load_toy("toy4");
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  auto scaled = run.pooling;
  scaled.entries = run.pooling.entries * 7.5;
  const auto predictions = predict(run.model, run.graph, scaled);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    CHECK(predictions[i].label == run.predictions[i].label);
  }
}

TEST_CASE("token renaming (vocabulary permutation) leaves predictions unchanged") {
  auto toy = load_toy("toy2");
  // Swap sort order: alpha -> zlast, beta -> afirst.
  auto renamed = toy.results;
  for (auto& r : renamed) {
    for (auto& t : r.triples) {
      for (auto* field : {&t.head, &t.relation, &t.tail}) {
        if (*field == "alpha") *field = "zlast";
        else if (*field == "beta") *field = "afirst";
      }
    }
  }
  const auto base = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  const auto permuted = full_run(toy.corpus, renamed, HarnessOptions{}, TrainConfig{});
  REQUIRE(base.predictions.size() == permuted.predictions.size());
  for (std::size_t i = 0; i < base.predictions.size(); ++i) {
    CHECK(base.predictions[i].class_index == permuted.predictions[i].class_index);
    CHECK((base.predictions[i].probs - permuted.predictions[i].probs).norm() <
          1e-9);
  }
}

TEST_CASE("loss trace CSV has the documented header") {
  gttest::TempDir dir;
  auto toy = load_toy("toy2");
  const auto run = full_run(toy.corpus, toy.results, HarnessOptions{}, TrainConfig{});
  write_loss_csv(run.model, dir.file("loss.csv"));
  const std::string csv = gttest::read_file(dir.file("loss.csv"));
  CHECK(csv.rfind("epoch,loss\n", 0) == 0);
}

}  // TEST_SUITE
