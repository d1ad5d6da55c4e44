#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "sqlconf/lexer.hpp"
#include "sqlconf/logit_scoring.hpp"
#include "sqlconf/metrics.hpp"
#include "sqlconf/schema_link.hpp"

namespace {

const std::string kQuery =
    "SELECT T1.name, COUNT(T2.id) AS total FROM singer AS T1 "
    "JOIN concert AS T2 ON T1.id = T2.singer_id "
    "WHERE T2.year >= 2014 AND T1.country != 'US' "
    "GROUP BY T1.name HAVING COUNT(T2.id) > 2 ORDER BY total DESC LIMIT 5";

/// One synthetic token per lexeme, alternating probabilities, with small
/// candidate lists: enough structure for folding to do real work.
std::vector<sqlconf::TokenRecord> synthetic_tokens(const std::string& sql) {
  std::vector<sqlconf::TokenRecord> tokens;
  double prob = 0.99;
  for (const sqlconf::Lexeme& lexeme : sqlconf::lex_sql(sql)) {
    sqlconf::TokenRecord token;
    token.text = lexeme.text;
    token.prob = prob;
    token.candidates = {{lexeme.text, prob}, {"x", (1.0 - prob) / 2}};
    prob = prob == 0.99 ? 0.7 : 0.99;
    tokens.push_back(std::move(token));
  }
  return tokens;
}

void BM_LexSql(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(sqlconf::lex_sql(kQuery));
  }
}
BENCHMARK(BM_LexSql);

void BM_ExtractLinks(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(sqlconf::extract(kQuery));
  }
}
BENCHMARK(BM_ExtractLinks);

void BM_ScoreSacAverage(benchmark::State& state) {
  std::vector<sqlconf::TokenRecord> tokens = synthetic_tokens(kQuery);
  std::vector<sqlconf::Lexeme> lexemes = sqlconf::lex_sql(kQuery);
  std::vector<sqlconf::Lexeme> aligned = sqlconf::align(tokens, lexemes);
  std::vector<sqlconf::Role> roles =
      sqlconf::classify_roles(aligned, sqlconf::extract(kQuery));
  sqlconf::FoldingConfig folding;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sqlconf::score(sqlconf::ScoringMethod::Sac,
                                            sqlconf::Aggregation::Average, aligned,
                                            roles, tokens, folding));
  }
}
BENCHMARK(BM_ScoreSacAverage);

void BM_Metrics(benchmark::State& state) {
  std::vector<sqlconf::LabeledScore> scores;
  for (int i = 0; i < 1000; ++i) {
    scores.push_back({(i % 100) / 100.0 + 0.005, i % 3 != 0, {}});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(sqlconf::auc_roc(scores));
    benchmark::DoNotOptimize(sqlconf::ece(scores, 10));
  }
}
BENCHMARK(BM_Metrics);

}  // namespace

BENCHMARK_MAIN();
