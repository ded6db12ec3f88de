#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace guardian::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Collapses every internal run of whitespace to a single space; trims ends.
std::string collapse_ws(std::string_view s);

// trim + lowercase + collapse_ws, the comparison form used across modules.
std::string canonical(std::string_view s);

// Lowercase alphanumeric runs ("I-95" -> {"i","95"}).
std::vector<std::string> tokenize(std::string_view s);

std::string truncate(std::string_view s, std::size_t max_chars);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

std::string sha256_hex(std::string_view data);
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t seed = 1469598103934665603ull);

}  // namespace guardian::text
