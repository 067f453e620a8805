#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace airgam {

/// Minimal CSV splitting: comma separated, double-quoted fields may contain
/// commas, doubled quotes escape a quote. No multi-line fields.
std::vector<std::string> split_csv_line(const std::string& line);

/// Joins fields into one CSV line, quoting only when necessary.
std::string join_csv_line(const std::vector<std::string>& fields);

/// Strips surrounding whitespace.
std::string trim(const std::string& s);

/// True for the sentinel spellings of a missing value: empty, "NA", "NaN", "nan".
bool is_missing_cell(const std::string& cell);

/// Parses a decimal number with '.' separator. Returns nullopt on garbage.
std::optional<double> parse_double_cell(const std::string& cell);

/// Reads all lines of a stream (tolerates trailing \r from CRLF files).
std::vector<std::string> read_lines(std::istream& in);

} // namespace airgam
