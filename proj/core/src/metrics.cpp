#include "sqlconf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sqlconf/errors.hpp"
#include "sqlconf/lexer.hpp"
#include "sqlconf/schema_link.hpp"

namespace sqlconf {
namespace {

// Bin index (0-based) for a score; scores of exactly 0 join the first bin.
size_t bin_index(double score, int bins) {
  if (score <= 0.0) return 0;
  const size_t idx = static_cast<size_t>(std::ceil(score * bins)) - 1;
  return std::min(idx, static_cast<size_t>(bins - 1));
}

}  // namespace

std::vector<CalibrationBin> calibration_bins(const std::vector<LabeledScore>& scores, int bins) {
  if (scores.empty()) throw EmptyInput("calibration over an empty score list");
  if (bins < 1) throw EmptyInput("bin count must be positive");
  std::vector<CalibrationBin> out(static_cast<size_t>(bins));
  std::vector<double> conf_sum(static_cast<size_t>(bins), 0.0);
  std::vector<size_t> correct(static_cast<size_t>(bins), 0);
  for (int b = 0; b < bins; ++b) {
    out[b].lower = static_cast<double>(b) / bins;
    out[b].upper = static_cast<double>(b + 1) / bins;
  }
  for (const LabeledScore& s : scores) {
    const size_t b = bin_index(s.score, bins);
    ++out[b].count;
    conf_sum[b] += s.score;
    if (s.correct) ++correct[b];
  }
  for (int b = 0; b < bins; ++b) {
    if (out[b].count == 0) continue;
    out[b].mean_confidence = conf_sum[b] / static_cast<double>(out[b].count);
    out[b].accuracy = static_cast<double>(correct[b]) / static_cast<double>(out[b].count);
  }
  return out;
}

double ece(const std::vector<LabeledScore>& scores, int bins) {
  const std::vector<CalibrationBin> decomposition = calibration_bins(scores, bins);
  const double n = static_cast<double>(scores.size());
  double total = 0.0;
  for (const CalibrationBin& b : decomposition) {
    if (b.count == 0) continue;
    total += (static_cast<double>(b.count) / n) * std::fabs(b.mean_confidence - b.accuracy);
  }
  return total;
}

std::optional<double> auc_roc(const std::vector<LabeledScore>& scores) {
  if (scores.empty()) throw EmptyInput("auc over an empty score list");
  const size_t n = scores.size();
  size_t positives = 0;
  for (const LabeledScore& s : scores) positives += s.correct ? 1 : 0;
  const size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  // Rank-sum form: average ranks over ties, then
  // AUC = (R+ - P(P+1)/2) / (P * N).
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a].score < scores[b].score; });
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]].score == scores[order[i]].score) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) {
      if (scores[order[k]].correct) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double q = static_cast<double>(negatives);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * q);
}

LengthBin length_bin(const std::string& generated_sql) {
  size_t count = 0;
  for (const Lexeme& l : lex_sql(generated_sql)) {
    if (l.kind != LexemeKind::Whitespace && l.kind != LexemeKind::Comment) ++count;
  }
  if (count <= 15) return LengthBin::Short;
  if (count <= 25) return LengthBin::Medium;
  return LengthBin::Long;
}

HeavinessBin heaviness_bin(const std::string& generated_sql) {
  const SchemaLinks links = extract(generated_sql);
  size_t weight = links.tables.size() + links.columns.size();
  for (const auto& [value, multiplicity] : links.values) {
    weight += static_cast<size_t>(multiplicity);
  }
  if (weight <= 5) return HeavinessBin::Low;
  if (weight <= 9) return HeavinessBin::Moderate;
  return HeavinessBin::High;
}

Strata stratify(const std::string& generated_sql, const std::optional<std::string>& difficulty) {
  Strata s;
  s.difficulty = difficulty.value_or("unknown");
  s.length = length_bin(generated_sql);
  s.heaviness = heaviness_bin(generated_sql);
  return s;
}

CalibrationReport build_report(const std::vector<LabeledScore>& scores, int ece_bins) {
  CalibrationReport report;
  report.n = scores.size();
  report.ece_bins = ece_bins;
  report.bins = calibration_bins(scores, ece_bins);
  report.ece = ece(scores, ece_bins);
  report.auc = auc_roc(scores);

  std::map<std::string, std::vector<LabeledScore>> strata;
  for (const LabeledScore& s : scores) {
    strata["difficulty=" + s.strata.difficulty].push_back(s);
    strata[std::string("length=") + to_string(s.strata.length)].push_back(s);
    strata[std::string("heaviness=") + to_string(s.strata.heaviness)].push_back(s);
  }
  for (const auto& [name, members] : strata) {
    StratumMetrics m;
    m.n = members.size();
    m.ece = ece(members, ece_bins);
    m.auc = auc_roc(members);
    report.per_stratum.emplace(name, m);
  }
  return report;
}

const char* to_string(LengthBin bin) {
  switch (bin) {
    case LengthBin::Short: return "Short";
    case LengthBin::Medium: return "Medium";
    case LengthBin::Long: return "Long";
  }
  return "?";
}

const char* to_string(HeavinessBin bin) {
  switch (bin) {
    case HeavinessBin::Low: return "Low";
    case HeavinessBin::Moderate: return "Moderate";
    case HeavinessBin::High: return "High";
  }
  return "?";
}

}  // namespace sqlconf
