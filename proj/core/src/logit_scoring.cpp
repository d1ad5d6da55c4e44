#include "sqlconf/logit_scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>

#include "sqlconf/errors.hpp"

namespace sqlconf {
namespace {

std::string trim_lower(std::string_view s) {
  size_t b = 0, e = s.size();
  auto ws = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
  while (b < e && ws(s[b])) ++b;
  while (e > b && ws(s[e - 1])) --e;
  std::string out(s.substr(b, e - b));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool keyword_is(const Lexeme& l, std::string_view upper) {
  return l.kind == LexemeKind::Keyword && to_upper(l.text) == upper;
}

bool any_keyword(const Lexeme& l, std::initializer_list<std::string_view> uppers) {
  if (l.kind != LexemeKind::Keyword) return false;
  const std::string up = to_upper(l.text);
  return std::any_of(uppers.begin(), uppers.end(),
                     [&](std::string_view u) { return up == u; });
}

// Accumulates folds per token position with candidate-entry dedup, so mass
// from one candidate is never counted twice even when several folding rules
// match it.
struct FoldState {
  double added = 0.0;
  std::set<size_t> used;
};

// Marks the chosen token's own candidate entry as spent.
void reserve_chosen(const TokenRecord& token, FoldState& st) {
  for (size_t i = 0; i < token.candidates.size(); ++i) {
    const TokenCandidate& c = token.candidates[i];
    if (c.text == token.text && c.prob == token.prob) {
      st.used.insert(i);
      return;
    }
  }
}

void fold_matching(const TokenRecord& token, const std::set<std::string>& equivalents,
                   FoldState& st) {
  for (size_t i = 0; i < token.candidates.size(); ++i) {
    if (st.used.count(i)) continue;
    if (equivalents.count(trim_lower(token.candidates[i].text))) {
      st.added += token.candidates[i].prob;
      st.used.insert(i);
    }
  }
}

struct Structure {
  // Each group lists, in emission order, the index of the first scoring
  // lexeme of every sibling item whose order is semantically free.
  std::vector<std::vector<size_t>> groups;
};

bool is_scoring(const Lexeme& l) {
  return l.kind != LexemeKind::Whitespace && l.kind != LexemeKind::Comment;
}

bool is_open(const Lexeme& l) { return l.kind == LexemeKind::Punctuation && l.text == "("; }
bool is_close(const Lexeme& l) { return l.kind == LexemeKind::Punctuation && l.text == ")"; }
bool is_comma(const Lexeme& l) { return l.kind == LexemeKind::Punctuation && l.text == ","; }

// Comma-separated projection lists: SELECT and GROUP BY items commute, ORDER
// BY items do not.
void collect_clause_lists(const std::vector<Lexeme>& lexemes, Structure& out) {
  const size_t n = lexemes.size();
  size_t i = 0;
  while (i < n) {
    bool group_by = false;
    if (keyword_is(lexemes[i], "GROUP")) {
      size_t j = i + 1;
      while (j < n && !is_scoring(lexemes[j])) ++j;
      if (j < n && keyword_is(lexemes[j], "BY")) {
        i = j + 1;
        group_by = true;
      } else {
        ++i;
        continue;
      }
    } else if (keyword_is(lexemes[i], "SELECT")) {
      ++i;
    } else {
      ++i;
      continue;
    }

    std::vector<size_t> items;
    int depth = 0;
    bool want_item = true;
    bool skip_quantifier = !group_by;  // DISTINCT / ALL directly after SELECT
    size_t j = i;
    for (; j < n; ++j) {
      const Lexeme& l = lexemes[j];
      if (!is_scoring(l)) continue;
      if (is_open(l)) {
        if (want_item) { items.push_back(j); want_item = false; }
        ++depth;
        continue;
      }
      if (is_close(l)) {
        if (depth == 0) break;  // clause ends with an enclosing subquery
        --depth;
        continue;
      }
      if (depth > 0) continue;
      if (is_comma(l)) { want_item = true; continue; }
      if (any_keyword(l, {"FROM", "WHERE", "GROUP", "HAVING", "ORDER", "LIMIT", "UNION",
                          "INTERSECT", "EXCEPT", "WINDOW"})) {
        break;
      }
      if (skip_quantifier && any_keyword(l, {"DISTINCT", "ALL"})) continue;
      skip_quantifier = false;
      if (want_item) { items.push_back(j); want_item = false; }
    }
    if (items.size() >= 2) out.groups.push_back(std::move(items));
    i = j;
  }
}

// Symmetric comparisons: for "x = y" the operand order commutes, so x's first
// token may absorb the candidate mass of y's first token.
void collect_symmetric_comparisons(const std::vector<Lexeme>& lexemes, Structure& out) {
  std::vector<size_t> sc;  // scoring lexeme indices
  for (size_t i = 0; i < lexemes.size(); ++i) {
    if (is_scoring(lexemes[i])) sc.push_back(i);
  }
  auto is_operand = [&](size_t idx) {
    switch (lexemes[idx].kind) {
      case LexemeKind::Identifier:
      case LexemeKind::QuotedIdentifier:
      case LexemeKind::NumericLiteral:
      case LexemeKind::StringLiteral:
        return true;
      default:
        return false;
    }
  };
  auto is_dot = [&](size_t idx) {
    return lexemes[idx].kind == LexemeKind::Punctuation && lexemes[idx].text == ".";
  };
  for (size_t k = 0; k + 1 < sc.size(); ++k) {
    const Lexeme& op = lexemes[sc[k]];
    if (op.kind != LexemeKind::Operator) continue;
    if (op.text != "=" && op.text != "==" && op.text != "!=" && op.text != "<>") continue;
    if (k == 0 || !is_operand(sc[k - 1]) || !is_operand(sc[k + 1])) continue;
    // Walk a dotted chain back to the operand's first lexeme.
    size_t lhs = k - 1;
    while (lhs >= 2 && is_dot(sc[lhs - 1]) && is_operand(sc[lhs - 2])) lhs -= 2;
    out.groups.push_back({sc[lhs], sc[k + 1]});
  }
}

// Uniform AND (or OR) chains: conjunct order commutes. BETWEEN ... AND pairs
// are not connectives; mixed chains are left alone because precedence makes
// them order-sensitive.
void collect_connective_chains(const std::vector<Lexeme>& lexemes, Structure& out) {
  struct Accum {
    std::vector<size_t> segments;
    std::optional<std::string> connective;
    bool mixed = false;
    bool want_segment = true;
    int between_pending = 0;
  };
  std::vector<Accum> stack(1);
  auto finalize = [&](Accum& a) {
    if (!a.mixed && a.connective && a.segments.size() >= 2) out.groups.push_back(a.segments);
    a = Accum{};
  };

  for (size_t i = 0; i < lexemes.size(); ++i) {
    const Lexeme& l = lexemes[i];
    if (!is_scoring(l)) continue;
    Accum& top = stack.back();
    if (is_open(l)) {
      if (top.want_segment) { top.segments.push_back(i); top.want_segment = false; }
      stack.emplace_back();
      continue;
    }
    if (is_close(l)) {
      finalize(stack.back());
      if (stack.size() > 1) stack.pop_back();
      continue;
    }
    if (keyword_is(l, "BETWEEN")) {
      ++top.between_pending;
      if (top.want_segment) { top.segments.push_back(i); top.want_segment = false; }
      continue;
    }
    if (any_keyword(l, {"AND", "OR"})) {
      const std::string up = to_upper(l.text);
      if (up == "AND" && top.between_pending > 0) { --top.between_pending; continue; }
      if (!top.connective) top.connective = up;
      else if (*top.connective != up) top.mixed = true;
      top.want_segment = true;
      continue;
    }
    if (any_keyword(l, {"SELECT", "FROM", "WHERE", "GROUP", "BY", "HAVING", "ORDER",
                        "LIMIT", "ON", "USING", "SET", "WHEN", "THEN", "ELSE", "END",
                        "CASE", "UNION", "INTERSECT", "EXCEPT", "JOIN"}) ||
        is_comma(l)) {
      finalize(stack.back());
      continue;
    }
    if (top.want_segment) { top.segments.push_back(i); top.want_segment = false; }
  }
  for (auto& a : stack) finalize(a);
}

// First token index of the item that starts at lexeme `li`, if any.
std::optional<size_t> first_token(const std::vector<Lexeme>& lexemes, size_t li) {
  if (lexemes[li].token_indices.empty()) return std::nullopt;
  return lexemes[li].token_indices.front();
}

// Applies every enabled folding rule and returns per-token probabilities.
std::vector<double> folded_token_probs(const std::vector<Lexeme>& lexemes,
                                       const std::vector<TokenRecord>& tokens,
                                       const FoldingConfig& config, bool case_synonym,
                                       bool order_equiv) {
  std::vector<FoldState> state(tokens.size());
  for (size_t t = 0; t < tokens.size(); ++t) reserve_chosen(tokens[t], state[t]);

  if (case_synonym && (config.case_folding || config.synonym_folding)) {
    // Token -> containing lexemes.
    std::vector<std::vector<size_t>> owners(tokens.size());
    for (size_t li = 0; li < lexemes.size(); ++li) {
      for (size_t t : lexemes[li].token_indices) owners[t].push_back(li);
    }
    std::map<std::string, const std::vector<std::string>*> synonym_index;
    for (const auto& cls : config.synonym_classes) {
      for (const std::string& member : cls) synonym_index[trim_lower(member)] = &cls;
    }
    for (size_t t = 0; t < tokens.size(); ++t) {
      std::set<std::string> equivalents;
      const std::string own = trim_lower(tokens[t].text);
      for (size_t li : owners[t]) {
        const LexemeKind kind = lexemes[li].kind;
        if (config.case_folding &&
            (kind == LexemeKind::Keyword || kind == LexemeKind::Identifier ||
             kind == LexemeKind::QuotedIdentifier)) {
          equivalents.insert(own);
        }
        if (config.synonym_folding && lexemes[li].token_indices.size() == 1 &&
            own == trim_lower(lexemes[li].text)) {
          auto it = synonym_index.find(own);
          if (it != synonym_index.end()) {
            for (const std::string& member : *it->second) {
              const std::string norm = trim_lower(member);
              if (norm != own) equivalents.insert(norm);
            }
          }
        }
      }
      if (!equivalents.empty()) fold_matching(tokens[t], equivalents, state[t]);
    }
  }

  if (order_equiv && (config.order_folding || config.equivalent_expressions)) {
    Structure structure;
    if (config.order_folding) collect_clause_lists(lexemes, structure);
    if (config.equivalent_expressions) {
      collect_symmetric_comparisons(lexemes, structure);
      collect_connective_chains(lexemes, structure);
    }
    for (const std::vector<size_t>& group : structure.groups) {
      for (size_t k = 0; k < group.size(); ++k) {
        const auto pos = first_token(lexemes, group[k]);
        if (!pos) continue;
        std::set<std::string> siblings;  // first tokens not yet emitted
        for (size_t m = k + 1; m < group.size(); ++m) {
          if (const auto sib = first_token(lexemes, group[m])) {
            const std::string text = trim_lower(tokens[*sib].text);
            if (!text.empty()) siblings.insert(text);
          }
        }
        if (!siblings.empty()) fold_matching(tokens[*pos], siblings, state[*pos]);
      }
    }
  }

  std::vector<double> probs(tokens.size());
  for (size_t t = 0; t < tokens.size(); ++t) {
    probs[t] = std::min(1.0, tokens[t].prob + state[t].added);
  }
  return probs;
}

double product_of(const Lexeme& lexeme, const std::vector<double>& token_probs) {
  double p = 1.0;
  for (size_t t : lexeme.token_indices) p *= token_probs[t];
  return p;
}

}  // namespace

double fold_probability(const TokenRecord& chosen, const std::vector<std::string>& equivalents) {
  FoldState st;
  reserve_chosen(chosen, st);
  std::set<std::string> set;
  for (const std::string& e : equivalents) set.insert(trim_lower(e));
  fold_matching(chosen, set, st);
  return std::min(1.0, chosen.prob + st.added);
}

std::vector<double> fold_order(const std::vector<Lexeme>& lexemes,
                               const std::vector<Role>& /*roles*/,
                               const std::vector<TokenRecord>& tokens,
                               const FoldingConfig& config) {
  const std::vector<double> token_probs =
      folded_token_probs(lexemes, tokens, config, /*case_synonym=*/false,
                         /*order_equiv=*/true);
  std::vector<double> out(lexemes.size(), 1.0);
  for (size_t li = 0; li < lexemes.size(); ++li) out[li] = product_of(lexemes[li], token_probs);
  return out;
}

MethodScore score(ScoringMethod method, Aggregation aggregation,
                  const std::vector<Lexeme>& lexemes, const std::vector<Role>& roles,
                  const std::vector<TokenRecord>& tokens, const FoldingConfig& config,
                  bool degenerate_is_error) {
  std::vector<double> token_probs;
  if (method == ScoringMethod::Sac) {
    token_probs = folded_token_probs(lexemes, tokens, config, true, true);
  } else {
    token_probs.reserve(tokens.size());
    for (const TokenRecord& t : tokens) token_probs.push_back(t.prob);
  }

  auto included = [&](size_t li) {
    if (lexemes[li].token_indices.empty()) return false;
    switch (method) {
      case ScoringMethod::Ftc:
        return true;
      case ScoringMethod::Slc:
        return roles[li] == Role::SchemaLinked || roles[li] == Role::Literal;
      case ScoringMethod::Sac:
        if (config.include_all_roles) return true;
        switch (roles[li]) {
          case Role::SchemaLinked:
          case Role::Literal:
          case Role::CriticalKeyword:
          case Role::ComparisonOperator:
            return true;
          case Role::Excludable:
            return !config.token_exclusion;
          case Role::Other:
            return false;
        }
        return false;
    }
    return false;
  };

  std::vector<double> per_lexeme;
  for (size_t li = 0; li < lexemes.size(); ++li) {
    if (included(li)) per_lexeme.push_back(product_of(lexemes[li], token_probs));
  }

  MethodScore result{method, aggregation, 0.0, static_cast<int>(per_lexeme.size()), false};
  if (per_lexeme.empty()) {
    if (degenerate_is_error) {
      throw EmptySelection(std::string(to_string(method)) + " selected no lexemes");
    }
    result.value = 0.5;
    result.degenerate = true;
    return result;
  }

  if (aggregation == Aggregation::Product) {
    double log_sum = 0.0;
    double min_p = 1.0;
    for (double p : per_lexeme) {
      log_sum += std::log(p);
      min_p = std::min(min_p, p);
    }
    // exp(log(...)) can overshoot by an ulp; the true product never exceeds
    // the smallest factor, so clamp to keep that invariant exact.
    result.value = std::min(std::exp(log_sum), min_p);
  } else {
    double sum = 0.0;
    for (double p : per_lexeme) sum += p;
    result.value = sum / static_cast<double>(per_lexeme.size());
  }
  return result;
}

const char* to_string(ScoringMethod method) {
  switch (method) {
    case ScoringMethod::Ftc: return "ftc";
    case ScoringMethod::Slc: return "slc";
    case ScoringMethod::Sac: return "sac";
  }
  return "?";
}

const char* to_string(Aggregation aggregation) {
  return aggregation == Aggregation::Product ? "product" : "average";
}

}  // namespace sqlconf
