#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace graphtext {

enum class Split { kTrain, kTest };

std::string to_string(Split split);
Split split_from_string(const std::string& token);

/// One text segment of the corpus: the unit of classification.
struct Document {
  std::string id;
  std::string raw_text;
  std::optional<std::string> refined_text;
  Split split = Split::kTrain;
  std::optional<std::string> label;

  /// Refined text when present, raw text otherwise.
  const std::string& display_text() const {
    return refined_text ? *refined_text : raw_text;
  }
};

/// Ordered set of distinct label names; a name's position is its class id.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int class_id) const;
  int index_of(const std::string& name) const;  // throws ArgumentError
  std::optional<int> find(const std::string& name) const;
  bool operator==(const LabelSet& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
};

struct Corpus {
  std::vector<Document> documents;
  LabelSet labels;

  std::vector<std::size_t> train_indices() const;
  std::vector<std::size_t> test_indices() const;
  const Document* find(const std::string& id) const;
};

/// Loads a corpus from a text file (one document per line) and a TSV meta
/// file (`<id>\t<split>\t<label>`, same count and order). The label set is
/// the sorted set of distinct labels seen in the meta file.
Corpus load_corpus(const std::filesystem::path& text_path,
                   const std::filesystem::path& meta_path);

/// Inverse of load_corpus; raw text only, refinements go to a sidecar.
void save_corpus(const Corpus& corpus, const std::filesystem::path& text_path,
                 const std::filesystem::path& meta_path);

/// Uniform random size-k subset of the train split, deterministic for a
/// fixed (k, seed). Test split unchanged. Train document order preserved.
Corpus subsample_train(const Corpus& corpus, std::size_t k, std::uint64_t seed);

/// Refined-text sidecar: JSONL of {"doc_id": ..., "refined": ...}.
void write_refinements(const Corpus& corpus, const std::filesystem::path& path);
void apply_refinements(Corpus& corpus, const std::filesystem::path& path);

}  // namespace graphtext
