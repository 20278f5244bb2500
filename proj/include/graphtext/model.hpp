#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "graphtext/corpus.hpp"
#include "graphtext/graph.hpp"

namespace graphtext {

/// Full-batch gradient descent settings. The objective is convex, so zero
/// initialization is safe and makes runs deterministic.
struct TrainConfig {
  double learning_rate = 0.05;
  int max_epochs = 500;
  double tolerance = 1e-7;       // stop when the loss decrease falls below
  double l2_weight = 0.0;
  double validation_fraction = 0.0;  // in [0, 1); carved from labeled rows
  int patience = 20;                 // epochs without validation-loss improvement
  double momentum = 0.0;

  void validate() const;  // throws ArgumentError on out-of-range fields
  std::string digest() const;
};

struct TraceRow {
  int epoch = 0;
  double loss = 0.0;
  std::optional<double> val_acc;
};

struct ClassifierModel {
  Vocabulary vocab;
  LabelSet labels;
  Eigen::MatrixXd weights;  // |V| x n
  std::string config_digest;
  std::vector<TraceRow> loss_trace;
};

struct Prediction {
  std::string doc_id;
  Eigen::VectorXd probs;
  int class_index = 0;
  std::string label;
};

/// Gold class index per pooling row for training: the label of train
/// documents, -1 for everything else (test rows never contribute to loss or
/// gradient, even when their gold labels are known).
std::vector<int> training_targets(const Corpus& corpus,
                                  const PoolingMatrix& pooling);

/// Row-wise numerically stable softmax, in place.
void softmax_rows(Eigen::MatrixXd& logits);

/// Logits Z = S (A_norm W).
Eigen::MatrixXd logits(const TextGraph& graph, const PoolingMatrix& pooling,
                       const Eigen::MatrixXd& weights);

/// Probability matrix softmax(Z); all-zero logit rows yield the uniform
/// distribution. Throws StateError on non-finite weights.
Eigen::MatrixXd forward(const TextGraph& graph, const PoolingMatrix& pooling,
                        const Eigen::MatrixXd& weights);

/// Mean cross-entropy over labeled rows (targets[i] >= 0) plus
/// l2_weight * ||W||^2 / 2. Gold probabilities are clamped at 1e-12; the
/// clamp cannot fire with finite logits and is counted when it does.
double loss(const Eigen::MatrixXd& probs, const std::vector<int>& targets,
            double l2_weight, const Eigen::MatrixXd& weights,
            std::int64_t* clamp_count = nullptr);

/// Analytic gradient: A_normᵀ Sᵀ (P - Y) / m + l2_weight W, with unlabeled
/// rows excluded from (P - Y) and m the number of labeled rows.
Eigen::MatrixXd gradient(const TextGraph& graph, const PoolingMatrix& pooling,
                         const Eigen::MatrixXd& weights,
                         const std::vector<int>& targets, double l2_weight);

/// Full-batch descent from W = 0. Stops on max_epochs, on a loss decrease
/// below tolerance, or on validation-loss patience when
/// validation_fraction > 0 (the validation subset is carved
/// deterministically from labeled rows by document-id digest, and the
/// weights at the best validation loss are restored). Throws TrainingError
/// when the loss or weights become non-finite.
ClassifierModel train(const TextGraph& graph, const PoolingMatrix& pooling,
                      const Corpus& corpus, const TrainConfig& config);

/// Predictions for every pooling row (ties at argmax break to the lowest
/// class index). Throws CompatibilityError when the model and graph
/// vocabularies differ, naming both digests.
std::vector<Prediction> predict(const ClassifierModel& model,
                                const TextGraph& graph,
                                const PoolingMatrix& pooling);

/// Fraction of predictions matching the corpus gold label, over documents
/// in the given split that carry one.
double accuracy(const std::vector<Prediction>& predictions,
                const Corpus& corpus, Split split);

/// JSON model artifact {version, vocab, labels, weights, config_digest,
/// loss_trace}; weights round-trip bit-exactly.
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

/// Loss trace as CSV `epoch,loss[,val_acc]`.
void write_loss_csv(const ClassifierModel& model, const std::filesystem::path& path);

}  // namespace graphtext
