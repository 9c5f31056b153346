#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lexd::csv {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

/// Quotes a field when it contains a comma, quote or line break.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Splits one CSV line (RFC 4180 quoting, no embedded newlines).
std::vector<std::string> split_line(std::string_view line);

}  // namespace lexd::csv
