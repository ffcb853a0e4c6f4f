#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace facemimic {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_number(double value);

double parse_number(std::string_view text);
long long parse_integer(std::string_view text);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

/// Splits on LF; a trailing LF does not produce an empty final row.
std::vector<std::string_view> split_lines(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace facemimic
