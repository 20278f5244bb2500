#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace graphtext {

/// One extracted fact (head entity, relation, tail entity).
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;

  bool operator==(const Triple&) const = default;
};

/// Parsed extraction response for one document.
struct ExtractionResult {
  std::string doc_id;
  std::vector<Triple> triples;
  bool is_none = false;
  int malformed_lines = 0;
};

/// Total parser for LLM extraction responses. Scans for parenthesized
/// triplets of three quoted items, accepting single or double quotes,
/// numbered-list prefixes, trailing punctuation, and `\'` escapes inside
/// single-quoted fields. Line endings inside an open parenthesis are folded
/// to a single space before matching. A quote-initiated parenthesized span
/// that fails to yield exactly three non-empty fields counts as one
/// malformed line; unquoted parenthesized prose is ignored. A response whose
/// trimmed body is "None" (case-insensitive, optionally quoted, optional
/// trailing period) sets is_none. Never throws.
ExtractionResult parse_triples(std::string_view response, std::string doc_id);

/// JSONL persistence, one object per document:
/// {"doc_id": ..., "none": bool, "triples": [["h","r","t"], ...], "malformed": int}
void write_triples(const std::vector<ExtractionResult>& results,
                   const std::filesystem::path& path);
std::vector<ExtractionResult> read_triples(const std::filesystem::path& path);

}  // namespace graphtext
