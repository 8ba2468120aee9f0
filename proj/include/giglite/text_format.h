#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace giglite {

/// Shortest decimal string that round-trips the float exactly ("-0" and "nan" included).
std::string format_float(float v);
void append_float(std::string& out, float v);

float parse_float(std::string_view s);
uint64_t parse_u64(std::string_view s);
int64_t parse_i64(std::string_view s);
double parse_double(std::string_view s);

/// Splits on a single delimiter; empty fields are preserved.
std::vector<std::string_view> split_fields(std::string_view line, char delim = '\t');

/// Reads the next line, dropping a trailing '\r'. Returns false at EOF.
/// `had_newline` reports whether the line was terminated.
bool read_line(std::istream& in, std::string& line, bool* had_newline = nullptr);

/// Widens a float to the double nearest its shortest decimal form, so that JSON
/// writers emit the short form and readers recover the same float.
double canonical_double(float v);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace giglite
