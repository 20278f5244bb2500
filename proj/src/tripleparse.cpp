#include "graphtext/tripleparse.hpp"

#include <fstream>
#include <optional>
#include <set>

#include <json.hpp>

#include "graphtext/errors.hpp"
#include "graphtext/text_util.hpp"

namespace graphtext {

namespace {

bool is_quote(char c) { return c == '\'' || c == '"'; }

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() &&
        (s[i + 1] == '\'' || s[i + 1] == '"' || s[i + 1] == '\\')) {
      out.push_back(s[i + 1]);
      ++i;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Folds line endings that occur inside an open parenthesis to a single
// space, so a triple wrapped across lines matches as one line. Quote state
// is only tracked inside parentheses; prose apostrophes at depth 0 cannot
// poison the scan.
std::string fold_wrapped_lines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') continue;
    if (quote != 0) {
      if (c == '\\' && i + 1 < text.size()) {
        out.push_back(c);
        out.push_back(text[++i]);
        continue;
      }
      if (c == '\n') {
        out.push_back(' ');
        continue;
      }
      if (c == quote) quote = 0;
      out.push_back(c);
      continue;
    }
    if (depth > 0 && is_quote(c)) {
      quote = c;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      depth = depth > 0 ? depth - 1 : 0;
    } else if (c == '\n' && depth > 0) {
      out.push_back(' ');
      continue;
    }
    out.push_back(c);
  }
  return out;
}

// Strict item lexer for "'a', 'b', 'c'"-style content (single or double
// quotes, \-escapes, optional trailing punctuation). nullopt on any
// structural deviation.
std::optional<std::vector<std::string>> parse_quoted_items(std::string_view in) {
  std::vector<std::string> items;
  std::size_t i = 0;
  const std::size_t n = in.size();
  auto skip_ws = [&] {
    while (i < n && std::isspace(static_cast<unsigned char>(in[i]))) ++i;
  };
  skip_ws();
  while (i < n && is_quote(in[i])) {
    const char q = in[i++];
    std::string raw;
    bool closed = false;
    while (i < n) {
      const char c = in[i];
      if (c == '\\' && i + 1 < n) {
        raw.push_back(c);
        raw.push_back(in[i + 1]);
        i += 2;
        continue;
      }
      ++i;
      if (c == q) {
        closed = true;
        break;
      }
      raw.push_back(c);
    }
    if (!closed) return std::nullopt;
    items.push_back(unescape(raw));
    skip_ws();
    if (i < n && in[i] == ',') {
      ++i;
      skip_ws();
      continue;
    }
    break;
  }
  while (i < n && (in[i] == '.' || in[i] == ',' || in[i] == ';' ||
                   in[i] == ':' || in[i] == '!' ||
                   std::isspace(static_cast<unsigned char>(in[i])))) {
    ++i;
  }
  if (i != n || items.empty()) return std::nullopt;
  return items;
}

// Splits on commas that sit outside quoted regions.
std::vector<std::string> split_top_level(std::string_view in) {
  std::vector<std::string> parts;
  std::string current;
  char quote = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const char c = in[i];
    if (quote != 0) {
      if (c == '\\' && i + 1 < in.size()) {
        current.push_back(c);
        current.push_back(in[++i]);
        continue;
      }
      if (c == quote) quote = 0;
      current.push_back(c);
      continue;
    }
    if (is_quote(c)) {
      quote = c;
      current.push_back(c);
    } else if (c == ',') {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

std::string strip_item(std::string_view item) {
  std::string_view t = trim_view(item);
  if (t.size() >= 2 && is_quote(t.front()) && t.back() == t.front()) {
    t = t.substr(1, t.size() - 2);
  }
  return trim(unescape(t));
}

std::optional<Triple> to_triple(const std::vector<std::string>& fields) {
  if (fields.size() != 3) return std::nullopt;
  Triple triple{trim(fields[0]), trim(fields[1]), trim(fields[2])};
  if (triple.head.empty() || triple.relation.empty() || triple.tail.empty()) {
    return std::nullopt;
  }
  return triple;
}

void handle_span(std::string_view inner, ExtractionResult& result);

// Extracts top-level parenthesized spans (quote-aware) and feeds each to
// handle_span. Unbalanced trailing content is ignored.
void scan_spans(std::string_view text, ExtractionResult& result) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (text[i] != '(') {
      ++i;
      continue;
    }
    int depth = 1;
    char quote = 0;
    std::size_t j = i + 1;
    while (j < n && depth > 0) {
      const char c = text[j];
      if (quote != 0) {
        if (c == '\\' && j + 1 < n) {
          j += 2;
          continue;
        }
        if (c == quote) quote = 0;
      } else if (is_quote(c)) {
        quote = c;
      } else if (c == '(') {
        ++depth;
      } else if (c == ')') {
        --depth;
      }
      ++j;
    }
    if (depth != 0) return;
    handle_span(text.substr(i + 1, j - i - 2), result);
    i = j;
  }
}

void handle_span(std::string_view inner, ExtractionResult& result) {
  const std::string_view trimmed = trim_view(inner);
  if (trimmed.empty()) return;
  if (is_quote(trimmed.front())) {
    // A quote-initiated span is an authoritative triple attempt: it either
    // parses or counts as malformed.
    if (auto items = parse_quoted_items(trimmed)) {
      if (auto triple = to_triple(*items)) {
        result.triples.push_back(std::move(*triple));
        return;
      }
    }
    const auto parts = split_top_level(trimmed);
    std::vector<std::string> fields;
    fields.reserve(parts.size());
    for (const auto& part : parts) fields.push_back(strip_item(part));
    if (auto triple = to_triple(fields)) {
      result.triples.push_back(std::move(*triple));
    } else {
      ++result.malformed_lines;
    }
    return;
  }
  if (trimmed.find('(') != std::string_view::npos) {
    scan_spans(trimmed, result);
  }
  // Unquoted parenthesized prose is ignored.
}

bool is_none_response(std::string_view response) {
  std::string_view t = trim_view(response);
  if (t.size() >= 2 && is_quote(t.front()) && t.back() == t.front()) {
    t = trim_view(t.substr(1, t.size() - 2));
  }
  if (!t.empty() && t.back() == '.') t = trim_view(t.substr(0, t.size() - 1));
  return iequals(t, "none");
}

}  // namespace

ExtractionResult parse_triples(std::string_view response, std::string doc_id) {
  ExtractionResult result;
  result.doc_id = std::move(doc_id);
  if (is_none_response(response)) {
    result.is_none = true;
    return result;
  }
  const std::string folded = fold_wrapped_lines(response);
  scan_spans(folded, result);
  return result;
}

void write_triples(const std::vector<ExtractionResult>& results,
                   const std::filesystem::path& path) {
  std::set<std::string> seen;
  for (const auto& r : results) {
    if (!seen.insert(r.doc_id).second) {
      throw ArgumentError("duplicate doc_id in triples output: " + r.doc_id);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw FormatError("cannot open triples file for writing: " + path.string());
  }
  for (const auto& r : results) {
    nlohmann::json triples = nlohmann::json::array();
    for (const auto& t : r.triples) {
      triples.push_back({t.head, t.relation, t.tail});
    }
    nlohmann::json record{{"doc_id", r.doc_id},
                          {"none", r.is_none},
                          {"triples", std::move(triples)},
                          {"malformed", r.malformed_lines}};
    out << record.dump() << '\n';
  }
}

std::vector<ExtractionResult> read_triples(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw FormatError("cannot open triples file: " + path.string());
  }
  std::vector<ExtractionResult> results;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw FormatError("malformed JSONL at line " + std::to_string(line_no) +
                        " of " + path.string());
    }
    ExtractionResult r;
    try {
      r.doc_id = record.at("doc_id").get<std::string>();
      r.is_none = record.at("none").get<bool>();
      r.malformed_lines = record.at("malformed").get<int>();
      for (const auto& t : record.at("triples")) {
        if (!t.is_array() || t.size() != 3) {
          throw FormatError("triple is not a 3-array");
        }
        r.triples.push_back(Triple{t[0].get<std::string>(),
                                   t[1].get<std::string>(),
                                   t[2].get<std::string>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad triples record at line " + std::to_string(line_no) +
                        " of " + path.string() + ": " + e.what());
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace graphtext
