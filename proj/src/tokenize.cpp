#include "graphtext/tokenize.hpp"

#include <cctype>

namespace graphtext {

namespace {

inline bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// ASCII alphanumerics and any UTF-8 continuation/lead byte count as word
// characters; everything else is strippable punctuation.
inline bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < n && !is_space_byte(static_cast<unsigned char>(text[i]))) ++i;
    if (i == start) continue;

    std::size_t lo = start;
    std::size_t hi = i;
    while (lo < hi && !is_word_byte(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && !is_word_byte(static_cast<unsigned char>(text[hi - 1]))) --hi;
    if (lo == hi) continue;

    std::string token;
    token.reserve(hi - lo);
    for (std::size_t k = lo; k < hi; ++k) {
      token.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(text[k]))));
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

}  // namespace graphtext
