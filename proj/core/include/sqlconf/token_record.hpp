#pragma once

#include <string>
#include <vector>

namespace sqlconf {

/// One candidate from a model's per-position top-k list, in linear probability.
struct TokenCandidate {
  std::string text;
  double prob = 0.0;
};

/// One emitted model token with its candidate list. Probabilities are linear
/// in (0, 1]; wire formats carry natural logs and convert at this boundary.
struct TokenRecord {
  std::string text;
  double prob = 0.0;
  std::vector<TokenCandidate> candidates;
};

/// Checks the record invariants: prob in (0,1], candidate probs in (0,1],
/// candidate probs sum to at most 1 + 1e-9, and the chosen token appears in
/// the candidate list with the same probability. Returns an empty string when
/// valid, otherwise a description of the first violation.
std::string validate_token_record(const TokenRecord& token);

}  // namespace sqlconf
