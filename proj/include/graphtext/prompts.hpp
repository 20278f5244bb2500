#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "graphtext/corpus.hpp"

namespace graphtext {

enum class PromptKind { kRefine, kExtractKg, kClassify };

/// Template body with its `[x]` placeholder intact. The bodies are embedded
/// at build time from resources/prompts/ and must stay byte-identical to
/// those files.
const std::string& prompt_template(PromptKind kind);

/// Digest over all template bodies; identifies the prompt revision in
/// manifests and cache provenance.
std::string prompt_version();

/// Refinement prompt with `[x]` replaced by the document's raw text.
std::string render_refine_prompt(const Document& doc);

/// Extraction prompt with `[x]` replaced by the refined text.
std::string render_extract_prompt(std::string_view refined);

/// One in-prompt classification example: the same text is rendered as a
/// "Good example" with good_label and, when used as a counterexample, as a
/// "Bad example" with bad_label.
struct ShotExample {
  std::string text;
  std::string good_label;
  std::string bad_label;
};

/// JSONL shot bank: {"text": ..., "good_label": ..., "bad_label": ...}.
std::vector<ShotExample> load_shot_bank(const std::filesystem::path& path);

/// Classification prompt per the good/bad example scheme. shots must be one
/// of {0, 1, 2, 5}; examples alternate good-first, so 2 shots consume one
/// bank entry (good + bad) and 5 shots consume three (3 good + 2 bad).
std::string render_classify_prompt(const Document& doc, const LabelSet& labels,
                                   int shots,
                                   const std::vector<ShotExample>& shot_bank);

}  // namespace graphtext
