#pragma once

#include <string>
#include <vector>

#include "sqlconf/lexer.hpp"
#include "sqlconf/token_record.hpp"

namespace sqlconf {

enum class ScoringMethod { Ftc, Slc, Sac };
enum class Aggregation { Product, Average };

/// Switches for the critical-token scorer. Defaults enable every feature.
struct FoldingConfig {
  bool token_exclusion = true;         // drop Excludable lexemes
  bool case_folding = true;            // fold case-variant candidates
  bool order_folding = true;           // fold clause-item order permutations
  bool synonym_folding = true;         // fold the synonym table ({!=, <>} by default)
  bool equivalent_expressions = true;  // fold x=y symmetry and AND/OR chain order
  int top_k = 5;                       // candidate list depth requested upstream
  /// Widens the critical-token filter to every aligned lexeme. With folding
  /// off this makes the critical-token score equal the full-token score.
  bool include_all_roles = false;
  /// Equivalence classes of interchangeable spellings, matched on trimmed
  /// text case-insensitively. Extend via configuration.
  std::vector<std::vector<std::string>> synonym_classes = {{"!=", "<>"}};
};

struct MethodScore {
  ScoringMethod method = ScoringMethod::Ftc;
  Aggregation aggregation = Aggregation::Product;
  double value = 0.0;
  int lexeme_count = 0;
  /// True when the method selected zero lexemes and `value` is the 0.5
  /// degenerate-input convention.
  bool degenerate = false;
};

/// Folds equivalent candidates into a chosen token's probability: adds the
/// probabilities of candidates whose trimmed text matches a member of
/// `equivalents` case-insensitively, excluding the chosen token's own entry.
/// Capped at 1.0.
double fold_probability(const TokenRecord& chosen, const std::vector<std::string>& equivalents);

/// Per-lexeme probabilities with only order and expression-symmetry folding
/// applied (per `config.order_folding` / `config.equivalent_expressions`).
/// The first token of each clause-list item, of a symmetric comparison's left
/// operand, and of each AND/OR chain link gains the candidate mass of sibling
/// first tokens not yet emitted; per-position results cap at 1.0.
std::vector<double> fold_order(const std::vector<Lexeme>& lexemes,
                               const std::vector<Role>& roles,
                               const std::vector<TokenRecord>& tokens,
                               const FoldingConfig& config);

/// Confidence of an aligned, role-classified query under one method:
///   Ftc: every aligned lexeme, raw probabilities.
///   Slc: schema-linked and literal lexemes, raw probabilities.
///   Sac: schema-linked, literal, critical-keyword and comparison lexemes,
///        with folding per `config`; Excludable lexemes return when
///        token_exclusion is off.
/// Product aggregates in log space; Average is the arithmetic mean. An empty
/// selection yields the degenerate 0.5 score, or throws EmptySelection when
/// `degenerate_is_error` is set.
MethodScore score(ScoringMethod method, Aggregation aggregation,
                  const std::vector<Lexeme>& lexemes, const std::vector<Role>& roles,
                  const std::vector<TokenRecord>& tokens, const FoldingConfig& config,
                  bool degenerate_is_error = false);

const char* to_string(ScoringMethod method);
const char* to_string(Aggregation aggregation);

}  // namespace sqlconf
