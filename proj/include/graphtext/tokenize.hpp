#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace graphtext {

/// Lowercases, splits on whitespace, strips leading/trailing non-alphanumeric
/// characters from each piece, and drops empties. Internal hyphens and
/// apostrophes survive ("two-for-one" stays one token). UTF-8 safe: bytes
/// >= 0x80 are treated as word characters and left untouched; case folding
/// applies to ASCII only. No stopword removal.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace graphtext
