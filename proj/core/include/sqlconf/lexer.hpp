#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sqlconf/token_record.hpp"

namespace sqlconf {

struct SchemaLinks;  // schema_link.hpp

enum class LexemeKind {
  Keyword,
  Identifier,
  QuotedIdentifier,
  StringLiteral,
  NumericLiteral,
  Operator,
  Punctuation,
  Whitespace,
  Comment,
};

enum class Role {
  SchemaLinked,
  CriticalKeyword,
  ComparisonOperator,
  Literal,
  Excludable,
  Other,
};

/// One SQL sub-unit. Spans are byte offsets into the lexed string; the lexemes
/// of a string are contiguous and cover it exactly, so concatenating their
/// texts reproduces the input byte for byte.
struct Lexeme {
  std::string text;
  LexemeKind kind = LexemeKind::Punctuation;
  size_t byte_start = 0;
  size_t byte_end = 0;
  /// Indices into the aligned token stream; empty before align() runs and for
  /// whitespace synthesized during normalization.
  std::vector<size_t> token_indices;
};

/// Lexes any byte string into SQL sub-units. Total: never fails; bytes that
/// start no recognized form become single-character Punctuation lexemes.
/// Longest-match (maximal munch) throughout.
std::vector<Lexeme> lex_sql(std::string_view sql);

/// True when `word` (any casing) is in the SQLite reserved-word list.
bool is_reserved_word(std::string_view word);

/// Assigns token indices to lexemes by byte-range overlap. A token straddling
/// a lexeme boundary is assigned to every lexeme it overlaps and contributes
/// its full probability to each (a documented source of double counting).
/// Requires the concatenated token texts to equal the concatenated lexeme
/// texts; throws AlignmentMismatch otherwise, quoting both sides.
std::vector<Lexeme> align(const std::vector<TokenRecord>& tokens,
                          const std::vector<Lexeme>& lexemes);

/// Product of the probabilities of the tokens assigned to `lexeme`.
double lexeme_probability(const Lexeme& lexeme, const std::vector<TokenRecord>& tokens);

/// Indices of paren Punctuation lexemes that are removable: deleting the pair
/// leaves a string that re-lexes to the identical sequence minus the pair.
/// Pairs that follow an identifier (function-call position) or the keywords
/// IN, EXISTS, USING or VALUES, and pairs that directly enclose a top-level
/// comma, a set operator, or a subquery head, are never reported even when
/// lexically removable, since removing them changes meaning.
std::vector<size_t> redundant_paren_indices(const std::vector<Lexeme>& lexemes);

/// Role per lexeme, positionally parallel to `lexemes`. `links` must come
/// from extracting the same SQL string.
std::vector<Role> classify_roles(const std::vector<Lexeme>& lexemes, const SchemaLinks& links);

const char* to_string(LexemeKind kind);
const char* to_string(Role role);

}  // namespace sqlconf
