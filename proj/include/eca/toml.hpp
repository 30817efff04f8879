#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

namespace eca::toml {

// Reader for the TOML subset used by plan and scenario files:
//   key = value          (bare or quoted keys)
//   [table] / [a.b]      (nested tables)
//   [[array.of.tables]]
//   strings ("basic" with escapes, 'literal'), integers, floats, booleans,
//   local dates (kept as ISO strings), and arrays (may span lines).
// Inline tables and dotted keys on the left of '=' are rejected.
// The document is returned as a JSON object; integers stay integers.
nlohmann::json parse(std::string_view text);
nlohmann::json parse_file(const std::string& path);

// Inverse of parse for documents with scalar/array leaves, nested tables and
// arrays of tables. Keys are emitted in the object's iteration order.
std::string dump(const nlohmann::json& doc);

}  // namespace eca::toml
