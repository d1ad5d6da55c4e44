#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

namespace sqlconf {

/// Schema elements referenced by a SQL string. Table and column names are
/// lowercased and unquoted; columns are stored unqualified. Values hold every
/// literal as canonical text with multiplicity, so `WHERE a = 1 OR b = 1`
/// carries {"1": 2}.
struct SchemaLinks {
  std::set<std::string> tables;
  std::set<std::string> columns;
  std::map<std::string, int> values;

  bool operator==(const SchemaLinks&) const = default;
};

/// Extracts schema links from any SQL string (grammar-free, lexeme driven).
/// Alias names defined via AS or positional aliasing resolve to their
/// underlying table and never appear as columns; `*` is not a column.
SchemaLinks extract(std::string_view sql);

/// Equality with multiset value semantics.
bool links_equal(const SchemaLinks& a, const SchemaLinks& b);

/// Canonical text for a numeric literal: 60, 60.0, 6e1 and 0x3c all map to
/// "60". Non-numeric input is returned unchanged.
std::string canonical_number(std::string_view text);

}  // namespace sqlconf
