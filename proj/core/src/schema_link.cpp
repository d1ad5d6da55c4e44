#include "sqlconf/schema_link.hpp"

#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <vector>

#include "sqlconf/lexer.hpp"

namespace sqlconf {
namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string unquote_identifier(std::string_view text) {
  if (text.size() >= 2) {
    const char a = text.front(), b = text.back();
    if ((a == '"' && b == '"') || (a == '`' && b == '`')) {
      std::string inner(text.substr(1, text.size() - 2));
      std::string out;
      for (size_t i = 0; i < inner.size(); ++i) {
        out += inner[i];
        if (inner[i] == a && i + 1 < inner.size() && inner[i + 1] == a) ++i;
      }
      return out;
    }
    if (a == '[' && b == ']') return std::string(text.substr(1, text.size() - 2));
  }
  return std::string(text);
}

std::string unquote_string(std::string_view text) {
  if (text.size() >= 2 && text.front() == '\'' && text.back() == '\'') {
    std::string inner(text.substr(1, text.size() - 2));
    std::string out;
    for (size_t i = 0; i < inner.size(); ++i) {
      out += inner[i];
      if (inner[i] == '\'' && i + 1 < inner.size() && inner[i + 1] == '\'') ++i;
    }
    return out;
  }
  return std::string(text);
}

bool is_name(const Lexeme& l) {
  return l.kind == LexemeKind::Identifier || l.kind == LexemeKind::QuotedIdentifier;
}

std::string name_of(const Lexeme& l) { return to_lower(unquote_identifier(l.text)); }

bool is_punct(const Lexeme& l, char c) {
  return l.kind == LexemeKind::Punctuation && l.text.size() == 1 && l.text[0] == c;
}

// Clause the walker is currently inside. Identifiers are columns only in the
// clause positions listed here as column contexts.
enum class Ctx { None, Select, From, Where, GroupBy, Having, OrderBy, On, Using, Limit, Set };

bool is_column_ctx(Ctx c) {
  switch (c) {
    case Ctx::Select:
    case Ctx::Where:
    case Ctx::GroupBy:
    case Ctx::Having:
    case Ctx::OrderBy:
    case Ctx::On:
    case Ctx::Using:
    case Ctx::Set:
      return true;
    default:
      return false;
  }
}

// Item slots inside a FROM list: expecting the next table reference, an
// optional alias after one, or a separator.
enum class FromSlot { Item, AliasOrSep, Sep };

struct WalkState {
  Ctx ctx = Ctx::None;
  FromSlot slot = FromSlot::Sep;
};

std::optional<Ctx> clause_for(const std::string& upper) {
  if (upper == "SELECT") return Ctx::Select;
  if (upper == "FROM" || upper == "JOIN") return Ctx::From;
  if (upper == "WHERE") return Ctx::Where;
  if (upper == "GROUP") return Ctx::GroupBy;
  if (upper == "HAVING") return Ctx::Having;
  if (upper == "ORDER") return Ctx::OrderBy;
  if (upper == "ON") return Ctx::On;
  if (upper == "USING") return Ctx::Using;
  if (upper == "LIMIT" || upper == "OFFSET") return Ctx::Limit;
  if (upper == "SET") return Ctx::Set;
  if (upper == "UNION" || upper == "INTERSECT" || upper == "EXCEPT" || upper == "WITH") {
    return Ctx::None;
  }
  return std::nullopt;
}

}  // namespace

std::string canonical_number(std::string_view text) {
  std::string s(text);
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str() + 2, &end, 16);
    if (end && *end == '\0') {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%llu", v);
      return buf;
    }
    return s;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (!end || end == s.c_str() || *end != '\0' || !std::isfinite(v)) return s;
  if (v == std::rint(v) && std::fabs(v) <= 9007199254740992.0) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%" PRId64, static_cast<int64_t>(v));
    return buf;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

SchemaLinks extract(std::string_view sql) {
  const std::vector<Lexeme> all = lex_sql(sql);
  std::vector<const Lexeme*> lx;  // scoring view: whitespace and comments dropped
  for (const Lexeme& l : all) {
    if (l.kind != LexemeKind::Whitespace && l.kind != LexemeKind::Comment) lx.push_back(&l);
  }
  const size_t n = lx.size();
  auto at = [&](size_t i) -> const Lexeme& { return *lx[i]; };
  auto next_is = [&](size_t i, char c) { return i + 1 < n && is_punct(at(i + 1), c); };

  // Pass 1: alias definitions. Aliases bind before use ("SELECT T1.ID FROM
  // Patient AS T1"), so the map must be complete before link collection.
  std::map<std::string, std::optional<std::string>> aliases;
  {
    WalkState st;
    std::vector<WalkState> stack;
    std::optional<std::string> last_table;
    for (size_t i = 0; i < n; ++i) {
      const Lexeme& l = at(i);
      if (l.kind == LexemeKind::Keyword) {
        const std::string up = to_upper(l.text);
        if (up == "AS") {
          if (i + 1 < n && is_name(at(i + 1))) {
            aliases[name_of(at(i + 1))] = (st.ctx == Ctx::From) ? last_table : std::nullopt;
            ++i;
            if (st.ctx == Ctx::From) st.slot = FromSlot::Sep;
          }
          continue;
        }
        if (const auto ctx = clause_for(up)) {
          st.ctx = *ctx;
          if (*ctx == Ctx::From) { st.slot = FromSlot::Item; last_table.reset(); }
          continue;
        }
        continue;
      }
      if (is_punct(l, '(')) {
        stack.push_back(st);
        // A parenthesized FROM item (subquery) completes the item on close.
        st = WalkState{st.ctx == Ctx::From ? Ctx::None : st.ctx, FromSlot::Sep};
        continue;
      }
      if (is_punct(l, ')')) {
        if (!stack.empty()) {
          st = stack.back();
          stack.pop_back();
          if (st.ctx == Ctx::From && st.slot == FromSlot::Item) {
            st.slot = FromSlot::AliasOrSep;
            last_table.reset();
          }
        }
        continue;
      }
      if (is_punct(l, ',')) {
        if (st.ctx == Ctx::From) { st.slot = FromSlot::Item; last_table.reset(); }
        continue;
      }
      if (is_name(l) && st.ctx == Ctx::From) {
        if (next_is(i, '(')) continue;  // table-valued function name
        if (next_is(i, '.')) continue;  // qualifier; the last chain part is the table
        if (st.slot == FromSlot::Item) {
          last_table = name_of(l);
          st.slot = FromSlot::AliasOrSep;
        } else if (st.slot == FromSlot::AliasOrSep) {
          aliases[name_of(l)] = last_table;  // positional alias
          st.slot = FromSlot::Sep;
        }
      }
    }
  }

  // Pass 2: tables, columns, values.
  SchemaLinks links;
  auto resolve_table_ref = [&](const std::string& name) {
    auto it = aliases.find(name);
    if (it == aliases.end()) {
      links.tables.insert(name);
    } else if (it->second) {
      links.tables.insert(*it->second);
    }
  };

  WalkState st;
  std::vector<WalkState> stack;
  for (size_t i = 0; i < n; ++i) {
    const Lexeme& l = at(i);
    if (l.kind == LexemeKind::Keyword) {
      const std::string up = to_upper(l.text);
      if (up == "AS") {
        if (i + 1 < n && is_name(at(i + 1))) {
          ++i;  // alias definition, not a column
          if (st.ctx == Ctx::From) st.slot = FromSlot::Sep;
        }
        continue;
      }
      if (const auto ctx = clause_for(up)) {
        st.ctx = *ctx;
        if (*ctx == Ctx::From) st.slot = FromSlot::Item;
      }
      continue;
    }
    if (is_punct(l, '(')) {
      stack.push_back(st);
      // Inside a FROM item the parens open a subquery or argument list, i.e.
      // expression territory; otherwise the clause context carries through.
      st = WalkState{st.ctx == Ctx::From ? Ctx::None : st.ctx, FromSlot::Sep};
      continue;
    }
    if (is_punct(l, ')')) {
      if (!stack.empty()) {
        st = stack.back();
        stack.pop_back();
        if (st.ctx == Ctx::From && st.slot == FromSlot::Item) st.slot = FromSlot::AliasOrSep;
      }
      continue;
    }
    if (is_punct(l, ',')) {
      if (st.ctx == Ctx::From) st.slot = FromSlot::Item;
      continue;
    }
    if (is_name(l)) {
      if (next_is(i, '(')) continue;  // function name
      if (next_is(i, '.') && st.ctx == Ctx::From && st.slot == FromSlot::Item) {
        // Database-qualified table reference: the last chain part is the table.
        size_t j = i;
        std::string table = name_of(l);
        while (j + 2 < n && is_punct(at(j + 1), '.') && is_name(at(j + 2))) {
          table = name_of(at(j + 2));
          j += 2;
        }
        links.tables.insert(table);
        st.slot = FromSlot::AliasOrSep;
        i = j;
        continue;
      }
      if (next_is(i, '.')) {
        // Dotted chain: db.table.column, alias.column, table.column, t.*.
        std::vector<std::string> parts = {name_of(l)};
        size_t j = i + 1;
        std::optional<std::string> column;
        bool star = false;
        while (j < n && is_punct(at(j), '.') && j + 1 < n) {
          const Lexeme& part = at(j + 1);
          if (is_name(part)) {
            parts.push_back(name_of(part));
          } else if (part.kind == LexemeKind::StringLiteral) {
            // SQLite tolerates single-quoted column names after a dot.
            parts.push_back(to_lower(unquote_string(part.text)));
          } else if (part.kind == LexemeKind::Operator && part.text == "*") {
            star = true;
            ++j;  // consume '.' and '*', then stop
            ++j;
            break;
          } else {
            break;
          }
          j += 2;
        }
        if (parts.size() >= 2) {
          resolve_table_ref(parts[parts.size() - 2]);
          column = parts.back();
        } else if (star) {
          resolve_table_ref(parts.back());
        }
        if (column && !star) links.columns.insert(*column);
        i = j - 1;
        continue;
      }
      const std::string name = name_of(l);
      if (st.ctx == Ctx::From) {
        if (st.slot == FromSlot::Item) {
          links.tables.insert(name);
          st.slot = FromSlot::AliasOrSep;
        } else if (st.slot == FromSlot::AliasOrSep) {
          st.slot = FromSlot::Sep;  // positional alias definition
        }
        continue;
      }
      if (is_column_ctx(st.ctx) && !aliases.count(name)) links.columns.insert(name);
      continue;
    }
    if (l.kind == LexemeKind::StringLiteral) {
      ++links.values[unquote_string(l.text)];
      continue;
    }
    if (l.kind == LexemeKind::NumericLiteral) {
      ++links.values[canonical_number(l.text)];
      continue;
    }
  }
  return links;
}

bool links_equal(const SchemaLinks& a, const SchemaLinks& b) { return a == b; }

}  // namespace sqlconf
