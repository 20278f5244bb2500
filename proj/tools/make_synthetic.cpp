// Regenerates the bundled synthetic benchmark under data/synthetic/. The
// corpus is fully determined by the constants below; the checked-in files
// are the canonical copy.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace {

constexpr std::uint64_t kSeed = 20240717;
constexpr int kClasses = 4;
constexpr int kTrainPerClass = 250;
constexpr int kTestPerClass = 100;
constexpr int kSignalPoolPerClass = 300;
constexpr int kNoisePool = 200;
constexpr int kSignalPerDoc = 5;
constexpr int kNoisePerDoc = 6;
constexpr int kMaxConfusersPerDoc = 1;

const char* kLabels[kClasses] = {"energy", "finance", "health", "transport"};

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

std::string make_word(std::mt19937_64& rng) {
  static const char* consonants = "bdfgklmnprstvz";
  static const char* vowels = "aeiou";
  const int syllables = 2 + static_cast<int>(bounded(rng, 3));
  std::string word;
  for (int s = 0; s < syllables; ++s) {
    word.push_back(consonants[bounded(rng, 14)]);
    word.push_back(vowels[bounded(rng, 5)]);
  }
  return word;
}

std::vector<std::string> make_pool(std::mt19937_64& rng, int size,
                                   std::set<std::string>& used) {
  std::vector<std::string> pool;
  pool.reserve(static_cast<std::size_t>(size));
  while (static_cast<int>(pool.size()) < size) {
    std::string word = make_word(rng);
    if (used.insert(word).second) pool.push_back(std::move(word));
  }
  return pool;
}

struct Doc {
  std::string id;
  std::string text;
  std::string split;
  std::string label;
};

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path out_dir =
      argc > 1 ? argv[1] : "data/synthetic";
  std::filesystem::create_directories(out_dir);

  std::mt19937_64 rng(kSeed);
  std::set<std::string> used;
  std::vector<std::vector<std::string>> signal(kClasses);
  for (int c = 0; c < kClasses; ++c) {
    signal[c] = make_pool(rng, kSignalPoolPerClass, used);
  }
  const std::vector<std::string> noise = make_pool(rng, kNoisePool, used);

  auto make_doc = [&](int cls) {
    std::vector<std::string> tokens;
    std::set<std::size_t> picked;
    while (static_cast<int>(tokens.size()) < kSignalPerDoc) {
      const auto i = bounded(rng, signal[cls].size());
      if (picked.insert(i).second) tokens.push_back(signal[cls][i]);
    }
    for (int k = 0; k < kNoisePerDoc; ++k) {
      tokens.push_back(noise[bounded(rng, noise.size())]);
    }
    const int confusers = static_cast<int>(bounded(rng, kMaxConfusersPerDoc + 1));
    for (int k = 0; k < confusers; ++k) {
      int other = static_cast<int>(bounded(rng, kClasses - 1));
      if (other >= cls) ++other;
      tokens.push_back(signal[other][bounded(rng, signal[other].size())]);
    }
    // Fisher-Yates shuffle for a stable, implementation-independent order.
    for (std::size_t i = tokens.size(); i > 1; --i) {
      std::swap(tokens[i - 1], tokens[bounded(rng, i)]);
    }
    std::string text;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i > 0) text.push_back(' ');
      text += tokens[i];
    }
    return text;
  };

  std::vector<Doc> docs;
  int train_id = 0;
  int test_id = 0;
  for (int c = 0; c < kClasses; ++c) {
    for (int k = 0; k < kTrainPerClass; ++k) {
      docs.push_back(Doc{"train-" + std::to_string(++train_id), make_doc(c),
                         "train", kLabels[c]});
    }
  }
  for (int c = 0; c < kClasses; ++c) {
    for (int k = 0; k < kTestPerClass; ++k) {
      docs.push_back(Doc{"test-" + std::to_string(++test_id), make_doc(c),
                         "test", kLabels[c]});
    }
  }
  // Interleave classes in the final ordering.
  for (std::size_t i = docs.size(); i > 1; --i) {
    std::swap(docs[i - 1], docs[bounded(rng, i)]);
  }

  std::ofstream text_out(out_dir / "texts.txt", std::ios::binary);
  std::ofstream meta_out(out_dir / "meta.tsv", std::ios::binary);
  for (const auto& doc : docs) {
    text_out << doc.text << '\n';
    meta_out << doc.id << '\t' << doc.split << '\t' << doc.label << '\n';
  }
  std::cout << "wrote " << docs.size() << " documents to " << out_dir.string()
            << "\n";
  return 0;
}
