#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace graphtext {

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Hex-encoded SHA-256 of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

/// Shortest decimal string that round-trips the double exactly.
std::string format_double(double value);

}  // namespace graphtext
