#ifndef DIFFHALLU_CSV_HPP
#define DIFFHALLU_CSV_HPP

#include <string>
#include <string_view>
#include <vector>

namespace diffhallu::csv {

using Row = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may contain commas, quotes ("") and newlines.
/// Blank lines are skipped. Throws std::runtime_error on an unterminated quote.
std::vector<Row> parse(std::string_view text);

/// Quotes the field only when it needs it.
std::string escape(std::string_view field);
std::string join(const Row& row);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);
/// Strict parse of a whole field as a double; throws std::invalid_argument.
double parse_double(std::string_view field);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace diffhallu::csv

#endif  // DIFFHALLU_CSV_HPP
