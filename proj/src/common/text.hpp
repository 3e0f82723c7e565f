#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gameharness::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

// Shortest round-trip decimal form of a double.
std::string format_number(double v);

}  // namespace gameharness::text
