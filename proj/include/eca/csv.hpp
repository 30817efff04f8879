#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace eca::csv {

// Minimal RFC-4180 reader: comma separator, double-quote quoting, CRLF tolerant.
// Returns false at end of input.
bool read_row(std::istream& in, std::vector<std::string>& fields);

// Quotes a field only when it contains a separator, quote or newline.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Shortest round-trip-safe text for a double ("NA" for NaN, "Inf"/"-Inf").
std::string format_number(double x);

// Whole-field decimal parse; nullopt for empty or trailing garbage.
std::optional<double> parse_number(std::string_view text);

}  // namespace eca::csv
