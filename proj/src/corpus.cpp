#include "graphtext/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "graphtext/errors.hpp"

namespace graphtext {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open file: " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Uniform draw in [0, bound) by rejection; mt19937_64 output is portable, so
// the subsample is reproducible across platforms.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

}  // namespace

std::string to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split split_from_string(const std::string& token) {
  if (token == "train") return Split::kTrain;
  if (token == "test") return Split::kTest;
  throw FormatError("unknown split token: \"" + token + "\"");
}

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) {
    throw ArgumentError("label set must be non-empty");
  }
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) {
      throw ArgumentError("label names must be non-empty");
    }
    if (!index_.emplace(names_[i], static_cast<int>(i)).second) {
      throw ArgumentError("duplicate label name: " + names_[i]);
    }
  }
}

const std::string& LabelSet::name(int class_id) const {
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= names_.size()) {
    throw ArgumentError("class id out of range: " + std::to_string(class_id));
  }
  return names_[static_cast<std::size_t>(class_id)];
}

int LabelSet::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw ArgumentError("unknown label: " + name);
  }
  return it->second;
}

std::optional<int> LabelSet::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> Corpus::train_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (documents[i].split == Split::kTrain) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> Corpus::test_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (documents[i].split == Split::kTest) out.push_back(i);
  }
  return out;
}

const Document* Corpus::find(const std::string& id) const {
  for (const auto& doc : documents) {
    if (doc.id == id) return &doc;
  }
  return nullptr;
}

Corpus load_corpus(const std::filesystem::path& text_path,
                   const std::filesystem::path& meta_path) {
  const auto texts = read_lines(text_path);
  const auto metas = read_lines(meta_path);
  if (texts.size() != metas.size()) {
    std::ostringstream msg;
    msg << "line-count mismatch: meta file " << meta_path.string() << " has "
        << metas.size() << " lines but text file " << text_path.string()
        << " has " << texts.size();
    throw FormatError(msg.str());
  }

  Corpus corpus;
  corpus.documents.reserve(texts.size());
  std::set<std::string> ids;
  std::set<std::string> label_names;
  bool has_train = false;
  bool has_test = false;

  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::string& meta_line = metas[i];
    const auto first_tab = meta_line.find('\t');
    const auto second_tab =
        first_tab == std::string::npos ? std::string::npos
                                       : meta_line.find('\t', first_tab + 1);
    if (second_tab == std::string::npos) {
      throw FormatError("meta line " + std::to_string(i + 1) +
                        " is not <id>\\t<split>\\t<label>");
    }
    Document doc;
    doc.id = meta_line.substr(0, first_tab);
    const std::string split_token =
        meta_line.substr(first_tab + 1, second_tab - first_tab - 1);
    const std::string label = meta_line.substr(second_tab + 1);

    if (doc.id.empty()) {
      throw FormatError("empty document id at meta line " +
                        std::to_string(i + 1));
    }
    if (!ids.insert(doc.id).second) {
      throw FormatError("duplicate document id: " + doc.id);
    }
    try {
      doc.split = split_from_string(split_token);
    } catch (const FormatError&) {
      throw FormatError("unknown split token \"" + split_token +
                        "\" at meta line " + std::to_string(i + 1));
    }
    if (texts[i].empty()) {
      throw FormatError("empty document line " + std::to_string(i + 1) +
                        " in " + text_path.string());
    }
    doc.raw_text = texts[i];
    if (!label.empty()) {
      doc.label = label;
      label_names.insert(label);
    } else if (doc.split == Split::kTrain) {
      throw FormatError("train document " + doc.id + " has no label (line " +
                        std::to_string(i + 1) + ")");
    }
    has_train = has_train || doc.split == Split::kTrain;
    has_test = has_test || doc.split == Split::kTest;
    corpus.documents.push_back(std::move(doc));
  }

  if (!has_train || !has_test) {
    throw FormatError("corpus needs at least one train and one test document");
  }
  corpus.labels =
      LabelSet(std::vector<std::string>(label_names.begin(), label_names.end()));
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& text_path,
                 const std::filesystem::path& meta_path) {
  std::ofstream text_out(text_path, std::ios::binary);
  std::ofstream meta_out(meta_path, std::ios::binary);
  if (!text_out || !meta_out) {
    throw FormatError("cannot open corpus output files");
  }
  for (const auto& doc : corpus.documents) {
    text_out << doc.raw_text << '\n';
    meta_out << doc.id << '\t' << to_string(doc.split) << '\t'
             << (doc.label ? *doc.label : "") << '\n';
  }
}

Corpus subsample_train(const Corpus& corpus, std::size_t k,
                       std::uint64_t seed) {
  auto train = corpus.train_indices();
  if (k > train.size()) {
    throw ArgumentError("subsample size " + std::to_string(k) +
                        " exceeds train size " + std::to_string(train.size()));
  }
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first k entries are a uniform subset.
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(bounded_draw(rng, train.size() - i));
    std::swap(train[i], train[j]);
  }
  std::vector<std::size_t> keep(train.begin(), train.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(keep.begin(), keep.end());

  Corpus out;
  out.labels = corpus.labels;
  std::size_t next = 0;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const auto& doc = corpus.documents[i];
    if (doc.split == Split::kTest) {
      out.documents.push_back(doc);
    } else if (next < keep.size() && keep[next] == i) {
      out.documents.push_back(doc);
      ++next;
    }
  }
  return out;
}

void write_refinements(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open refinements file: " + path.string());
  }
  for (const auto& doc : corpus.documents) {
    if (!doc.refined_text) continue;
    nlohmann::json record{{"doc_id", doc.id}, {"refined", *doc.refined_text}};
    out << record.dump() << '\n';
  }
}

void apply_refinements(Corpus& corpus, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open refinements file: " + path.string());
  }
  std::unordered_map<std::string, std::string> refined;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("doc_id") ||
        !record.contains("refined")) {
      throw FormatError("malformed refinement record at line " +
                        std::to_string(line_no) + " of " + path.string());
    }
    refined[record["doc_id"].get<std::string>()] =
        record["refined"].get<std::string>();
  }
  for (auto& doc : corpus.documents) {
    auto it = refined.find(doc.id);
    if (it != refined.end()) doc.refined_text = it->second;
  }
}

}  // namespace graphtext
