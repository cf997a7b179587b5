#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gwkit::csv {

using Row = std::vector<std::string>;

// Parses RFC-4180 text: comma separated, double-quote escaping, CRLF or LF
// line endings, quoted fields may span lines. A UTF-8 byte order mark is
// skipped. Blank lines are ignored.
std::vector<Row> parse(std::string_view text);

// Writes one record, quoting fields that need it. Lines end with '\n'.
void write_row(std::ostream& out, const Row& fields);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

// Strict numeric parse of a whole field (surrounding blanks allowed).
// Returns nullopt for anything that is not a number.
std::optional<double> parse_double(std::string_view field);

// Empty, "NA", "NaN" and "null" cells (case-insensitive) count as missing.
bool is_missing(std::string_view field);

}  // namespace gwkit::csv
