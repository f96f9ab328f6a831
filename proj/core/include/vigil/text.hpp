#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vigil {

/// Formats a double to 6 significant digits in plain decimal notation
/// (no exponent). This is the wire format for every CSV the project emits.
std::string format_value(double value);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

/// Strict numeric parsing: the whole field must be consumed.
double parse_double(std::string_view field, const char* context);
std::int64_t parse_int(std::string_view field, const char* context);

/// Splits text into lines on '\n', dropping one trailing '\r' per line and a
/// final empty line. Keeps interior empty lines so callers can reject them.
std::vector<std::string_view> split_lines(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace vigil
