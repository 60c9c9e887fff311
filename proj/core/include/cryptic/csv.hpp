#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cryptic {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: comma separated, double-quoted fields may contain commas,
/// newlines and doubled quotes. A trailing newline does not add a row; CRLF is
/// accepted. Throws ParseError with the 1-based line of an unterminated quote.
std::vector<CsvRow> parse_csv(std::string_view text);
std::vector<CsvRow> read_csv_file(const std::filesystem::path& path);

/// Line number (1-based) on which each row returned by parse_csv starts.
std::vector<std::size_t> csv_row_lines(std::string_view text);

/// Quotes a field only when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view value);
std::string csv_line(const CsvRow& row);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cryptic
