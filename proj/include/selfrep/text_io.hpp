#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace selfrep::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Lines of a text file, without terminators; a trailing empty line is dropped.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace selfrep::io
