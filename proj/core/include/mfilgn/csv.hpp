#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace mfilgn {

struct CsvRow {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 style: comma separated, double-quoted fields with "" escapes and
/// embedded newlines. Blank lines are skipped; a UTF-8 BOM is ignored.
std::vector<CsvRow> parse_csv(std::string_view text);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// Shortest-safe round-trip rendering used for every numeric CSV cell.
std::string format_number(double value);

}  // namespace mfilgn
