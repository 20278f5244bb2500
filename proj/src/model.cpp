#include "graphtext/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "graphtext/digest.hpp"
#include "graphtext/errors.hpp"

namespace graphtext {

namespace {

constexpr int kModelArtifactVersion = 1;
constexpr double kProbFloor = 1e-12;

// Deterministic, seed-free ordering used to carve the validation subset out
// of the labeled rows. A digest-based key scatters ids that differ only in a
// trailing counter.
std::string carve_key(const std::string& doc_id) { return sha256_hex(doc_id); }

void check_dimensions(const TextGraph& graph, const PoolingMatrix& pooling,
                      const Eigen::MatrixXd& weights) {
  const auto v = static_cast<Eigen::Index>(graph.vocab.size());
  if (pooling.entries.cols() != v || weights.rows() != v) {
    throw ArgumentError("graph, pooling, and weights dimensions disagree");
  }
}

int argmax_lowest_tie(const Eigen::VectorXd& row) {
  int best = 0;
  for (int c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

double validation_accuracy(const Eigen::MatrixXd& probs,
                           const std::vector<int>& targets,
                           const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (Eigen::Index r : rows) {
    Eigen::VectorXd row = probs.row(r);
    if (argmax_lowest_tie(row) == targets[static_cast<std::size_t>(r)]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

double validation_loss(const Eigen::MatrixXd& probs,
                       const std::vector<int>& targets,
                       const std::vector<Eigen::Index>& rows) {
  if (rows.empty()) return 0.0;
  double total = 0.0;
  for (Eigen::Index r : rows) {
    const double p =
        std::max(probs(r, targets[static_cast<std::size_t>(r)]), kProbFloor);
    total -= std::log(p);
  }
  return total / static_cast<double>(rows.size());
}

Eigen::MatrixXd residual(const Eigen::MatrixXd& probs,
                         const std::vector<int>& targets) {
  std::size_t labeled = 0;
  for (int t : targets) {
    if (t >= 0) ++labeled;
  }
  if (labeled == 0) {
    throw ArgumentError("no labeled rows to train on");
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(probs.rows(), probs.cols());
  const double scale = 1.0 / static_cast<double>(labeled);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0) continue;
    r.row(i) = probs.row(i) * scale;
    r(i, t) -= scale;
  }
  return r;
}

}  // namespace

void TrainConfig::validate() const {
  // learning_rate 0 and max_epochs 0 are allowed: both leave W at zero,
  // which the no-training contracts rely on.
  if (learning_rate < 0.0) throw ArgumentError("learning_rate must be non-negative");
  if (max_epochs < 0) throw ArgumentError("max_epochs must be non-negative");
  if (!(tolerance > 0.0)) throw ArgumentError("tolerance must be positive");
  if (l2_weight < 0.0) throw ArgumentError("l2_weight must be non-negative");
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw ArgumentError("validation_fraction must be in [0, 1)");
  }
  if (patience <= 0) throw ArgumentError("patience must be positive");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw ArgumentError("momentum must be in [0, 1)");
  }
}

std::string TrainConfig::digest() const {
  nlohmann::json doc{{"learning_rate", learning_rate},
                     {"max_epochs", max_epochs},
                     {"tolerance", tolerance},
                     {"l2_weight", l2_weight},
                     {"validation_fraction", validation_fraction},
                     {"patience", patience},
                     {"momentum", momentum}};
  return sha256_hex(doc.dump()).substr(0, 16);
}

std::vector<int> training_targets(const Corpus& corpus,
                                  const PoolingMatrix& pooling) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& doc : corpus.documents) by_id.emplace(doc.id, &doc);
  std::vector<int> targets;
  targets.reserve(pooling.doc_ids.size());
  for (const auto& id : pooling.doc_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ArgumentError("pooling row has no corpus document: " + id);
    }
    const Document& doc = *it->second;
    if (doc.split == Split::kTrain && doc.label) {
      targets.push_back(corpus.labels.index_of(*doc.label));
    } else {
      targets.push_back(-1);
    }
  }
  return targets;
}

void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double row_max = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - row_max).exp();
    logits.row(i) /= logits.row(i).sum();
  }
}

Eigen::MatrixXd logits(const TextGraph& graph, const PoolingMatrix& pooling,
                       const Eigen::MatrixXd& weights) {
  check_dimensions(graph, pooling, weights);
  const Eigen::MatrixXd smoothed = graph.norm_adjacency * weights;
  return pooling.entries * smoothed;
}

Eigen::MatrixXd forward(const TextGraph& graph, const PoolingMatrix& pooling,
                        const Eigen::MatrixXd& weights) {
  if (!weights.allFinite()) {
    throw StateError("weights contain non-finite entries");
  }
  Eigen::MatrixXd probs = logits(graph, pooling, weights);
  softmax_rows(probs);
  return probs;
}

double loss(const Eigen::MatrixXd& probs, const std::vector<int>& targets,
            double l2_weight, const Eigen::MatrixXd& weights,
            std::int64_t* clamp_count) {
  std::size_t labeled = 0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t < 0) continue;
    ++labeled;
    double p = probs(i, t);
    if (p < kProbFloor) {
      p = kProbFloor;
      if (clamp_count != nullptr) ++*clamp_count;
    }
    total -= std::log(p);
  }
  if (labeled == 0) {
    throw ArgumentError("loss needs at least one labeled row");
  }
  return total / static_cast<double>(labeled) +
         0.5 * l2_weight * weights.squaredNorm();
}

Eigen::MatrixXd gradient(const TextGraph& graph, const PoolingMatrix& pooling,
                         const Eigen::MatrixXd& weights,
                         const std::vector<int>& targets, double l2_weight) {
  const Eigen::MatrixXd probs = forward(graph, pooling, weights);
  const Eigen::MatrixXd r = residual(probs, targets);
  // A_norm is symmetric, so A_normᵀ Sᵀ R = A_norm (Sᵀ R).
  Eigen::MatrixXd grad =
      graph.norm_adjacency * (pooling.entries.transpose() * r);
  if (l2_weight > 0.0) grad += l2_weight * weights;
  return grad;
}

ClassifierModel train(const TextGraph& graph, const PoolingMatrix& pooling,
                      const Corpus& corpus, const TrainConfig& config) {
  config.validate();
  const auto targets = training_targets(corpus, pooling);
  const auto n_classes = static_cast<Eigen::Index>(corpus.labels.size());
  const auto n_words = static_cast<Eigen::Index>(graph.vocab.size());

  // Validation subset: labeled rows ordered by doc-id hash, first fraction.
  std::vector<Eigen::Index> labeled_rows;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] >= 0) labeled_rows.push_back(static_cast<Eigen::Index>(i));
  }
  std::vector<Eigen::Index> val_rows;
  auto train_targets = targets;
  if (config.validation_fraction > 0.0) {
    std::vector<Eigen::Index> order = labeled_rows;
    std::vector<std::string> keys(pooling.doc_ids.size());
    for (Eigen::Index r : order) {
      keys[static_cast<std::size_t>(r)] =
          carve_key(pooling.doc_ids[static_cast<std::size_t>(r)]);
    }
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return keys[static_cast<std::size_t>(a)] <
             keys[static_cast<std::size_t>(b)];
    });
    const auto n_val = static_cast<std::size_t>(
        config.validation_fraction * static_cast<double>(order.size()));
    val_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    for (Eigen::Index r : val_rows) train_targets[static_cast<std::size_t>(r)] = -1;
  }

  ClassifierModel model;
  model.vocab = graph.vocab;
  model.labels = corpus.labels;
  model.weights = Eigen::MatrixXd::Zero(n_words, n_classes);
  model.config_digest = config.digest();

  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n_words, n_classes);
  Eigen::MatrixXd best_weights = model.weights;
  double best_val_loss = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  Eigen::MatrixXd probs = forward(graph, pooling, model.weights);
  double current_loss = loss(probs, train_targets, config.l2_weight, model.weights);
  if (!std::isfinite(current_loss)) {
    throw TrainingError("initial loss is non-finite");
  }

  auto record = [&](int epoch) {
    TraceRow row{epoch, current_loss, std::nullopt};
    if (!val_rows.empty()) {
      row.val_acc = validation_accuracy(probs, targets, val_rows);
    }
    model.loss_trace.push_back(row);
  };
  // Patience runs on validation loss: accuracy plateaus in coarse steps and
  // can transiently dip below its epoch-0 tie-rule value, which would freeze
  // the zero model. The trace still records accuracy.
  auto note_validation = [&]() {
    const double val_loss = validation_loss(probs, targets, val_rows);
    if (val_loss < best_val_loss) {
      best_val_loss = val_loss;
      best_weights = model.weights;
      epochs_since_best = 0;
      return true;
    }
    return false;
  };
  record(0);
  if (!val_rows.empty()) note_validation();

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const Eigen::MatrixXd r = residual(probs, train_targets);
    Eigen::MatrixXd grad =
        graph.norm_adjacency * (pooling.entries.transpose() * r);
    if (config.l2_weight > 0.0) grad += config.l2_weight * model.weights;

    if (config.momentum > 0.0) {
      velocity = config.momentum * velocity - config.learning_rate * grad;
      model.weights += velocity;
    } else {
      model.weights -= config.learning_rate * grad;
    }
    if (!model.weights.allFinite()) {
      throw TrainingError(
          "weights diverged to a non-finite value; lower the learning rate");
    }

    probs = forward(graph, pooling, model.weights);
    const double new_loss =
        loss(probs, train_targets, config.l2_weight, model.weights);
    if (!std::isfinite(new_loss)) {
      throw TrainingError(
          "loss diverged to a non-finite value; lower the learning rate");
    }
    const double decrease = current_loss - new_loss;
    current_loss = new_loss;
    record(epoch);

    if (!val_rows.empty()) {
      if (!note_validation() && ++epochs_since_best >= config.patience) {
        break;
      }
    }
    if (decrease < config.tolerance) break;
  }

  if (!val_rows.empty()) {
    model.weights = best_weights;
  }
  return model;
}

std::vector<Prediction> predict(const ClassifierModel& model,
                                const TextGraph& graph,
                                const PoolingMatrix& pooling) {
  if (!(model.vocab == graph.vocab)) {
    throw CompatibilityError("model vocabulary " + model.vocab.digest() +
                             " does not match graph vocabulary " +
                             graph.vocab.digest());
  }
  const Eigen::MatrixXd probs = forward(graph, pooling, model.weights);
  std::vector<Prediction> predictions;
  predictions.reserve(pooling.doc_ids.size());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Prediction p;
    p.doc_id = pooling.doc_ids[static_cast<std::size_t>(i)];
    p.probs = probs.row(i);
    p.class_index = argmax_lowest_tie(p.probs);
    p.label = model.labels.name(p.class_index);
    predictions.push_back(std::move(p));
  }
  return predictions;
}

double accuracy(const std::vector<Prediction>& predictions,
                const Corpus& corpus, Split split) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& doc : corpus.documents) by_id.emplace(doc.id, &doc);
  std::size_t total = 0;
  std::size_t correct = 0;
  for (const auto& p : predictions) {
    auto it = by_id.find(p.doc_id);
    if (it == by_id.end()) continue;
    const Document& doc = *it->second;
    if (doc.split != split || !doc.label) continue;
    ++total;
    if (p.label == *doc.label) ++correct;
  }
  if (total == 0) {
    throw ArgumentError("no labeled documents in the requested split");
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  nlohmann::json weights = nlohmann::json::array();
  for (Eigen::Index i = 0; i < model.weights.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < model.weights.cols(); ++j) {
      row.push_back(model.weights(i, j));
    }
    weights.push_back(std::move(row));
  }
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& row : model.loss_trace) {
    nlohmann::json r{{"epoch", row.epoch}, {"loss", row.loss}};
    if (row.val_acc) r["val_acc"] = *row.val_acc;
    trace.push_back(std::move(r));
  }
  nlohmann::json doc{{"version", kModelArtifactVersion},
                     {"vocab", model.vocab.tokens()},
                     {"labels", model.labels.names()},
                     {"weights", std::move(weights)},
                     {"config_digest", model.config_digest},
                     {"loss_trace", std::move(trace)}};
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open model artifact for writing: " + path.string());
  }
  out << doc.dump(2) << '\n';
}

ClassifierModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open model artifact: " + path.string());
  }
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) {
    throw FormatError("model artifact is not valid JSON: " + path.string());
  }
  try {
    if (doc.at("version").get<int>() != kModelArtifactVersion) {
      throw FormatError("unsupported model artifact version in " + path.string());
    }
    ClassifierModel model;
    model.vocab = Vocabulary(doc.at("vocab").get<std::vector<std::string>>());
    model.labels = LabelSet(doc.at("labels").get<std::vector<std::string>>());
    model.config_digest = doc.at("config_digest").get<std::string>();
    const auto& weights = doc.at("weights");
    const auto rows = static_cast<Eigen::Index>(weights.size());
    const auto cols =
        rows > 0 ? static_cast<Eigen::Index>(weights[0].size())
                 : static_cast<Eigen::Index>(model.labels.size());
    model.weights.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        model.weights(i, j) = weights[static_cast<std::size_t>(i)]
                                     [static_cast<std::size_t>(j)]
                                         .get<double>();
      }
    }
    for (const auto& r : doc.at("loss_trace")) {
      TraceRow row{r.at("epoch").get<int>(), r.at("loss").get<double>(),
                   std::nullopt};
      if (r.contains("val_acc")) row.val_acc = r["val_acc"].get<double>();
      model.loss_trace.push_back(row);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad model artifact " + path.string() + ": " + e.what());
  }
}

void write_loss_csv(const ClassifierModel& model,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open loss CSV for writing: " + path.string());
  }
  const bool has_val = !model.loss_trace.empty() &&
                       model.loss_trace.front().val_acc.has_value();
  out << (has_val ? "epoch,loss,val_acc\n" : "epoch,loss\n");
  for (const auto& row : model.loss_trace) {
    out << row.epoch << ',' << format_double(row.loss);
    if (has_val && row.val_acc) out << ',' << format_double(*row.val_acc);
    out << '\n';
  }
}

}  // namespace graphtext
