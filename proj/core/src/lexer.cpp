#include "sqlconf/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <unordered_set>

#include "sqlconf/errors.hpp"
#include "sqlconf/schema_link.hpp"

namespace sqlconf {
namespace {

// SQLite reserved words (https://sqlite.org/lang_keywords.html).
const std::unordered_set<std::string>& reserved_words() {
  static const std::unordered_set<std::string> words = {
      "ABORT", "ACTION", "ADD", "AFTER", "ALL", "ALTER", "ALWAYS", "ANALYZE", "AND",
      "AS", "ASC", "ATTACH", "AUTOINCREMENT", "BEFORE", "BEGIN", "BETWEEN", "BY",
      "CASCADE", "CASE", "CAST", "CHECK", "COLLATE", "COLUMN", "COMMIT", "CONFLICT",
      "CONSTRAINT", "CREATE", "CROSS", "CURRENT", "CURRENT_DATE", "CURRENT_TIME",
      "CURRENT_TIMESTAMP", "DATABASE", "DEFAULT", "DEFERRABLE", "DEFERRED", "DELETE",
      "DESC", "DETACH", "DISTINCT", "DO", "DROP", "EACH", "ELSE", "END", "ESCAPE",
      "EXCEPT", "EXCLUDE", "EXCLUSIVE", "EXISTS", "EXPLAIN", "FAIL", "FILTER",
      "FIRST", "FOLLOWING", "FOR", "FOREIGN", "FROM", "FULL", "GENERATED", "GLOB",
      "GROUP", "GROUPS", "HAVING", "IF", "IGNORE", "IMMEDIATE", "IN", "INDEX",
      "INDEXED", "INITIALLY", "INNER", "INSERT", "INSTEAD", "INTERSECT", "INTO",
      "IS", "ISNULL", "JOIN", "KEY", "LAST", "LEFT", "LIKE", "LIMIT", "MATCH",
      "MATERIALIZED", "NATURAL", "NO", "NOT", "NOTHING", "NOTNULL", "NULL", "NULLS",
      "OF", "OFFSET", "ON", "OR", "ORDER", "OTHERS", "OUTER", "OVER", "PARTITION",
      "PLAN", "PRAGMA", "PRECEDING", "PRIMARY", "QUERY", "RAISE", "RANGE",
      "RECURSIVE", "REFERENCES", "REGEXP", "REINDEX", "RELEASE", "RENAME", "REPLACE",
      "RESTRICT", "RETURNING", "RIGHT", "ROLLBACK", "ROW", "ROWS", "SAVEPOINT",
      "SELECT", "SET", "TABLE", "TEMP", "TEMPORARY", "THEN", "TIES", "TO",
      "TRANSACTION", "TRIGGER", "UNBOUNDED", "UNION", "UNIQUE", "UPDATE", "USING",
      "VACUUM", "VALUES", "VIEW", "VIRTUAL", "WHEN", "WHERE", "WINDOW", "WITH",
      "WITHOUT"};
  return words;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_space_byte(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// SQLite treats any byte >= 0x80 as an identifier character.
bool is_ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c >= 0x80;
}
bool is_ident_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80;
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_hex_digit(unsigned char c) { return std::isxdigit(c); }

const std::array<std::string_view, 1> kOps3 = {"->>"};
const std::array<std::string_view, 9> kOps2 = {"!=", "<>", "<=", ">=", "==",
                                               "||", "<<", ">>", "->"};
const std::array<char, 11> kOps1 = {'=', '<', '>', '+', '-', '*', '/', '%', '&', '|', '~'};

}  // namespace

bool is_reserved_word(std::string_view word) {
  return reserved_words().count(to_upper(word)) > 0;
}

std::vector<Lexeme> lex_sql(std::string_view sql) {
  std::vector<Lexeme> out;
  size_t i = 0;
  const size_t n = sql.size();
  auto emit = [&](size_t start, size_t end, LexemeKind kind) {
    out.push_back(Lexeme{std::string(sql.substr(start, end - start)), kind, start, end, {}});
    i = end;
  };

  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(sql[i]);

    if (is_space_byte(c)) {
      size_t j = i + 1;
      while (j < n && is_space_byte(static_cast<unsigned char>(sql[j]))) ++j;
      emit(i, j, LexemeKind::Whitespace);
      continue;
    }
    if (c == '-' && i + 1 < n && sql[i + 1] == '-') {  // line comment, newline excluded
      size_t j = i + 2;
      while (j < n && sql[j] != '\n') ++j;
      emit(i, j, LexemeKind::Comment);
      continue;
    }
    if (c == '/' && i + 1 < n && sql[i + 1] == '*') {  // block comment, to */ or EOF
      size_t j = sql.find("*/", i + 2);
      emit(i, j == std::string_view::npos ? n : j + 2, LexemeKind::Comment);
      continue;
    }
    if (c == '\'') {  // string literal, '' escapes, unterminated runs to EOF
      size_t j = i + 1;
      while (j < n) {
        if (sql[j] == '\'') {
          if (j + 1 < n && sql[j + 1] == '\'') { j += 2; continue; }
          ++j;
          break;
        }
        ++j;
      }
      emit(i, j, LexemeKind::StringLiteral);
      continue;
    }
    if (c == '"' || c == '`') {  // quoted identifier, doubled-quote escapes
      const char q = static_cast<char>(c);
      size_t j = i + 1;
      while (j < n) {
        if (sql[j] == q) {
          if (j + 1 < n && sql[j + 1] == q) { j += 2; continue; }
          ++j;
          break;
        }
        ++j;
      }
      emit(i, j, LexemeKind::QuotedIdentifier);
      continue;
    }
    if (c == '[') {  // bracket-quoted identifier
      size_t j = sql.find(']', i + 1);
      emit(i, j == std::string_view::npos ? n : j + 1, LexemeKind::QuotedIdentifier);
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(static_cast<unsigned char>(sql[i + 1])))) {
      size_t j = i;
      if (c == '0' && i + 1 < n && (sql[i + 1] == 'x' || sql[i + 1] == 'X') && i + 2 < n &&
          is_hex_digit(static_cast<unsigned char>(sql[i + 2]))) {
        j = i + 2;
        while (j < n && is_hex_digit(static_cast<unsigned char>(sql[j]))) ++j;
      } else {
        while (j < n && is_digit(static_cast<unsigned char>(sql[j]))) ++j;
        if (j < n && sql[j] == '.') {
          ++j;
          while (j < n && is_digit(static_cast<unsigned char>(sql[j]))) ++j;
        }
        if (j < n && (sql[j] == 'e' || sql[j] == 'E')) {  // exponent only if complete
          size_t k = j + 1;
          if (k < n && (sql[k] == '+' || sql[k] == '-')) ++k;
          if (k < n && is_digit(static_cast<unsigned char>(sql[k]))) {
            ++k;
            while (k < n && is_digit(static_cast<unsigned char>(sql[k]))) ++k;
            j = k;
          }
        }
      }
      emit(i, j, LexemeKind::NumericLiteral);
      continue;
    }
    if (is_ident_start(c)) {
      size_t j = i + 1;
      while (j < n && is_ident_char(static_cast<unsigned char>(sql[j]))) ++j;
      const std::string_view word = sql.substr(i, j - i);
      emit(i, j, is_reserved_word(word) ? LexemeKind::Keyword : LexemeKind::Identifier);
      continue;
    }
    {
      bool matched = false;
      for (std::string_view op : kOps3) {
        if (sql.substr(i, op.size()) == op) { emit(i, i + op.size(), LexemeKind::Operator); matched = true; break; }
      }
      if (matched) continue;
      for (std::string_view op : kOps2) {
        if (sql.substr(i, op.size()) == op) { emit(i, i + op.size(), LexemeKind::Operator); matched = true; break; }
      }
      if (matched) continue;
      if (std::find(kOps1.begin(), kOps1.end(), static_cast<char>(c)) != kOps1.end()) {
        emit(i, i + 1, LexemeKind::Operator);
        continue;
      }
    }
    // Recognized punctuation and any unmatchable byte both land here.
    emit(i, i + 1, LexemeKind::Punctuation);
  }
  return out;
}

std::vector<Lexeme> align(const std::vector<TokenRecord>& tokens,
                          const std::vector<Lexeme>& lexemes) {
  std::string token_text;
  for (const TokenRecord& t : tokens) token_text += t.text;
  std::string lexed_text;
  for (const Lexeme& l : lexemes) lexed_text += l.text;
  if (token_text != lexed_text) {
    throw AlignmentMismatch("token stream does not spell the lexed SQL: tokens=\"" +
                            token_text + "\" lexed=\"" + lexed_text + "\"");
  }
  if (lexemes.empty()) {
    if (!tokens.empty()) {
      throw AlignmentMismatch("tokens present but there is nothing to align them to");
    }
    return {};
  }

  std::vector<Lexeme> out = lexemes;
  for (Lexeme& l : out) l.token_indices.clear();

  size_t cursor = 0;  // first lexeme that may still overlap the current token
  size_t pos = 0;
  for (size_t ti = 0; ti < tokens.size(); ++ti) {
    const size_t start = pos;
    const size_t end = pos + tokens[ti].text.size();
    pos = end;
    if (start == end) {
      // Zero-width token: attach to the lexeme containing this position.
      size_t host = cursor;
      while (host + 1 < out.size() && out[host].byte_end <= start) ++host;
      out[host].token_indices.push_back(ti);
      continue;
    }
    while (cursor < out.size() && out[cursor].byte_end <= start) ++cursor;
    for (size_t li = cursor; li < out.size() && out[li].byte_start < end; ++li) {
      out[li].token_indices.push_back(ti);
    }
  }
  return out;
}

double lexeme_probability(const Lexeme& lexeme, const std::vector<TokenRecord>& tokens) {
  double p = 1.0;
  for (size_t ti : lexeme.token_indices) p *= tokens.at(ti).prob;
  return p;
}

namespace {

bool is_ws_or_comment(const Lexeme& l) {
  return l.kind == LexemeKind::Whitespace || l.kind == LexemeKind::Comment;
}

bool keyword_is(const Lexeme& l, std::string_view upper) {
  return l.kind == LexemeKind::Keyword && to_upper(l.text) == upper;
}

bool same_kind_sequence(const std::vector<Lexeme>& a, const std::vector<Lexeme>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].kind != b[i].kind || a[i].text != b[i].text) return false;
  }
  return true;
}

}  // namespace

std::vector<size_t> redundant_paren_indices(const std::vector<Lexeme>& lexemes) {
  std::vector<size_t> result;
  std::vector<size_t> stack;
  std::vector<std::pair<size_t, size_t>> pairs;
  for (size_t i = 0; i < lexemes.size(); ++i) {
    if (lexemes[i].kind != LexemeKind::Punctuation) continue;
    if (lexemes[i].text == "(") stack.push_back(i);
    if (lexemes[i].text == ")" && !stack.empty()) {
      pairs.emplace_back(stack.back(), i);
      stack.pop_back();
    }
  }

  for (const auto& [open, close] : pairs) {
    // Function-call or list position: the pair is load-bearing even when its
    // removal re-lexes cleanly (e.g. "COUNT (id)" or "IN (1)").
    size_t prev = open;
    bool blocked = false;
    while (prev > 0) {
      --prev;
      if (is_ws_or_comment(lexemes[prev])) continue;
      if (lexemes[prev].kind == LexemeKind::Identifier ||
          lexemes[prev].kind == LexemeKind::QuotedIdentifier) {
        blocked = true;
      } else if (lexemes[prev].kind == LexemeKind::Keyword) {
        const std::string up = to_upper(lexemes[prev].text);
        if (up == "IN" || up == "EXISTS" || up == "USING" || up == "VALUES") blocked = true;
      }
      break;
    }
    if (blocked) continue;

    int depth = 0;
    for (size_t i = open + 1; i < close && !blocked; ++i) {
      const Lexeme& l = lexemes[i];
      if (l.kind == LexemeKind::Punctuation && l.text == "(") ++depth;
      else if (l.kind == LexemeKind::Punctuation && l.text == ")") --depth;
      else if (depth == 0) {
        if (l.kind == LexemeKind::Punctuation && l.text == ",") blocked = true;
        if (l.kind == LexemeKind::Keyword) {
          const std::string up = to_upper(l.text);
          if (up == "UNION" || up == "INTERSECT" || up == "EXCEPT") blocked = true;
        }
      }
    }
    if (blocked) continue;
    // Subquery head directly inside the pair.
    for (size_t i = open + 1; i < close; ++i) {
      if (is_ws_or_comment(lexemes[i])) continue;
      if (keyword_is(lexemes[i], "SELECT") || keyword_is(lexemes[i], "WITH") ||
          keyword_is(lexemes[i], "VALUES")) {
        blocked = true;
      }
      break;
    }
    if (blocked) continue;

    // Confirm by construction: drop the pair, re-lex, compare.
    std::string without;
    std::vector<Lexeme> expected;
    for (size_t i = 0; i < lexemes.size(); ++i) {
      if (i == open || i == close) continue;
      without += lexemes[i].text;
      expected.push_back(lexemes[i]);
    }
    if (same_kind_sequence(lex_sql(without), expected)) {
      result.push_back(open);
      result.push_back(close);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

namespace {

const std::unordered_set<std::string>& critical_keywords() {
  static const std::unordered_set<std::string> words = {
      "JOIN", "ON", "WHERE", "GROUP", "BY", "HAVING", "ORDER", "LIMIT", "SELECT",
      "FROM", "DISTINCT", "AND", "OR", "NOT", "IN", "BETWEEN", "LIKE", "CASE",
      "WHEN", "THEN", "ELSE", "END"};
  return words;
}

const std::unordered_set<std::string>& aggregate_names() {
  static const std::unordered_set<std::string> words = {"COUNT", "SUM", "AVG", "MIN", "MAX"};
  return words;
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

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<Role> classify_roles(const std::vector<Lexeme>& lexemes, const SchemaLinks& links) {
  const std::vector<size_t> redundant = redundant_paren_indices(lexemes);
  auto is_redundant = [&](size_t i) {
    return std::binary_search(redundant.begin(), redundant.end(), i);
  };

  std::vector<Role> roles(lexemes.size(), Role::Other);
  for (size_t i = 0; i < lexemes.size(); ++i) {
    const Lexeme& l = lexemes[i];
    switch (l.kind) {
      case LexemeKind::Whitespace:
      case LexemeKind::Comment:
        roles[i] = Role::Excludable;
        break;
      case LexemeKind::Keyword: {
        const std::string up = to_upper(l.text);
        if (up == "AS" || up == "INNER" || up == "OUTER" || up == "ASC") {
          roles[i] = Role::Excludable;
        } else if (critical_keywords().count(up)) {
          roles[i] = Role::CriticalKeyword;
        }
        break;
      }
      case LexemeKind::Identifier:
      case LexemeKind::QuotedIdentifier: {
        const std::string name = to_lower(unquote_identifier(l.text));
        if (links.tables.count(name) || links.columns.count(name)) {
          roles[i] = Role::SchemaLinked;
        } else if (l.kind == LexemeKind::Identifier && aggregate_names().count(to_upper(l.text))) {
          roles[i] = Role::CriticalKeyword;
        }
        break;
      }
      case LexemeKind::StringLiteral: {
        const std::string value = unquote_string(l.text);
        if (links.values.count(value)) {
          roles[i] = Role::Literal;
        } else if (links.columns.count(to_lower(value))) {
          // SQLite accepts string literals as column names after a dot.
          roles[i] = Role::SchemaLinked;
        }
        break;
      }
      case LexemeKind::NumericLiteral: {
        if (links.values.count(canonical_number(l.text))) roles[i] = Role::Literal;
        break;
      }
      case LexemeKind::Operator: {
        static const std::unordered_set<std::string> cmp = {"=", "!=", "<>", "<",
                                                            ">", "<=", ">="};
        if (cmp.count(l.text)) roles[i] = Role::ComparisonOperator;
        break;
      }
      case LexemeKind::Punctuation: {
        if (l.text == "," || l.text == ";") roles[i] = Role::Excludable;
        else if ((l.text == "(" || l.text == ")") && is_redundant(i)) roles[i] = Role::Excludable;
        break;
      }
    }
  }
  return roles;
}

std::string validate_token_record(const TokenRecord& token) {
  if (!(token.prob > 0.0) || token.prob > 1.0) return "token prob outside (0, 1]";
  double sum = 0.0;
  bool chosen_present = false;
  for (const TokenCandidate& c : token.candidates) {
    if (!(c.prob > 0.0) || c.prob > 1.0) return "candidate prob outside (0, 1]";
    sum += c.prob;
    if (c.text == token.text && c.prob == token.prob) chosen_present = true;
  }
  if (sum > 1.0 + 1e-9) return "candidate probs sum above 1";
  if (!token.candidates.empty() && !chosen_present) {
    return "chosen token missing from its candidate list";
  }
  return {};
}

const char* to_string(LexemeKind kind) {
  switch (kind) {
    case LexemeKind::Keyword: return "Keyword";
    case LexemeKind::Identifier: return "Identifier";
    case LexemeKind::QuotedIdentifier: return "QuotedIdentifier";
    case LexemeKind::StringLiteral: return "StringLiteral";
    case LexemeKind::NumericLiteral: return "NumericLiteral";
    case LexemeKind::Operator: return "Operator";
    case LexemeKind::Punctuation: return "Punctuation";
    case LexemeKind::Whitespace: return "Whitespace";
    case LexemeKind::Comment: return "Comment";
  }
  return "?";
}

const char* to_string(Role role) {
  switch (role) {
    case Role::SchemaLinked: return "SchemaLinked";
    case Role::CriticalKeyword: return "CriticalKeyword";
    case Role::ComparisonOperator: return "ComparisonOperator";
    case Role::Literal: return "Literal";
    case Role::Excludable: return "Excludable";
    case Role::Other: return "Other";
  }
  return "?";
}

}  // namespace sqlconf
