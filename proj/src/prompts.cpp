#include "graphtext/prompts.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "graphtext/digest.hpp"
#include "graphtext/errors.hpp"
#include "graphtext/prompts_data.hpp"
#include "graphtext/text_util.hpp"

namespace graphtext {

namespace {

const std::string kRefine = detail::kRefineTemplate;
const std::string kExtract = detail::kExtractTemplate;
const std::string kClassify = detail::kClassifyTemplate;

std::string substitute_x(const std::string& body, std::string_view value) {
  const auto pos = body.find("[x]");
  if (pos == std::string::npos) {
    throw StateError("prompt template lacks its [x] placeholder");
  }
  std::string out = body;
  out.replace(pos, 3, value);
  return out;
}

std::string label_list(const LabelSet& labels) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out << ", ";
    out << '\'' << labels.names()[i] << '\'';
  }
  out << ']';
  return out.str();
}

std::string shot_block(const char* block_template, const std::string& text,
                       const std::string& label) {
  std::string out = block_template;
  out = replace_all(std::move(out), "[x]", text);
  out = replace_all(std::move(out), "[label]", label);
  return out;
}

}  // namespace

const std::string& prompt_template(PromptKind kind) {
  switch (kind) {
    case PromptKind::kRefine:
      return kRefine;
    case PromptKind::kExtractKg:
      return kExtract;
    case PromptKind::kClassify:
      return kClassify;
  }
  throw ArgumentError("unknown prompt kind");
}

std::string prompt_version() {
  return sha256_hex(kRefine + "\x1f" + kExtract + "\x1f" + kClassify + "\x1f" +
                    detail::kClassifyGoodShot + "\x1f" +
                    detail::kClassifyBadShot)
      .substr(0, 12);
}

std::string render_refine_prompt(const Document& doc) {
  if (doc.raw_text.empty()) {
    throw ArgumentError("cannot render refinement prompt for empty text");
  }
  return substitute_x(kRefine, doc.raw_text);
}

std::string render_extract_prompt(std::string_view refined) {
  if (refined.empty()) {
    throw ArgumentError("cannot render extraction prompt for empty text");
  }
  return substitute_x(kExtract, refined);
}

std::vector<ShotExample> load_shot_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open shot bank: " + path.string());
  }
  std::vector<ShotExample> bank;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_view(line).empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("text") ||
        !record.contains("good_label") || !record.contains("bad_label")) {
      throw FormatError("malformed shot bank record at line " +
                        std::to_string(line_no) + " of " + path.string());
    }
    bank.push_back(ShotExample{record["text"].get<std::string>(),
                               record["good_label"].get<std::string>(),
                               record["bad_label"].get<std::string>()});
  }
  return bank;
}

std::string render_classify_prompt(const Document& doc, const LabelSet& labels,
                                   int shots,
                                   const std::vector<ShotExample>& shot_bank) {
  if (shots != 0 && shots != 1 && shots != 2 && shots != 5) {
    throw ArgumentError("shots must be one of {0, 1, 2, 5}, got " +
                        std::to_string(shots));
  }
  const int entries_needed = (shots + 1) / 2;
  if (static_cast<int>(shot_bank.size()) < entries_needed) {
    throw ArgumentError("shot bank has " + std::to_string(shot_bank.size()) +
                        " entries but " + std::to_string(shots) +
                        "-shot needs " + std::to_string(entries_needed));
  }

  // Good-first alternation over the bank: shot k is entry k/2, good when k
  // is even. Two-shot is one good plus one bad counterexample; five-shot is
  // three good and two bad.
  std::string shots_text;
  for (int k = 0; k < shots; ++k) {
    const ShotExample& entry = shot_bank[static_cast<std::size_t>(k / 2)];
    const bool good = k % 2 == 0;
    shots_text += "\n\n";
    shots_text += shot_block(good ? detail::kClassifyGoodShot
                                  : detail::kClassifyBadShot,
                             entry.text,
                             good ? entry.good_label : entry.bad_label);
  }

  std::string body = kClassify;
  body = replace_all(std::move(body), "[labels]", label_list(labels));
  body = replace_all(std::move(body), "[shots]", shots_text);
  return substitute_x(body, doc.display_text());
}

}  // namespace graphtext
