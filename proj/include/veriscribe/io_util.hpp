#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace veriscribe {

std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a partial output behind.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::vector<std::string_view> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_shortest(double value);
/// `value` rounded to `digits` significant decimal digits.
double round_significant(double value, int digits);
/// Fixed notation with `decimals` places.
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view text, std::size_t line = 0);
long long parse_integer(std::string_view text, std::size_t line = 0);

}  // namespace veriscribe
