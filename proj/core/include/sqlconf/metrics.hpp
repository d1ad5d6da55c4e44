#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sqlconf {

enum class LengthBin { Short, Medium, Long };
enum class HeavinessBin { Low, Moderate, High };

/// Strata a scored query belongs to when reporting breakdowns.
struct Strata {
  std::string difficulty = "unknown";
  LengthBin length = LengthBin::Short;
  HeavinessBin heaviness = HeavinessBin::Low;
};

struct LabeledScore {
  double score = 0.0;
  bool correct = false;
  Strata strata;
};

struct CalibrationBin {
  double lower = 0.0;  // exclusive
  double upper = 0.0;  // inclusive
  size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;
};

struct StratumMetrics {
  size_t n = 0;
  std::optional<double> auc;  // absent when the stratum has a single class
  double ece = 0.0;
};

struct CalibrationReport {
  size_t n = 0;
  std::optional<double> auc;
  double ece = 0.0;
  int ece_bins = 10;
  std::vector<CalibrationBin> bins;
  std::map<std::string, StratumMetrics> per_stratum;  // "difficulty=easy", "length=Short", ...
};

/// Expected calibration error over `bins` equal-width bins spanning (0, 1].
/// Bin i (1-based) covers ((i-1)/B, i/B]; a score of exactly 0 goes to bin 1.
/// Throws EmptyInput on an empty list.
double ece(const std::vector<LabeledScore>& scores, int bins = 10);

/// The per-bin decomposition behind ece(); bins are returned for all B slots
/// so counts sum to n.
std::vector<CalibrationBin> calibration_bins(const std::vector<LabeledScore>& scores, int bins);

/// Probability a uniformly random (correct, incorrect) pair is ranked
/// correctly, ties counting one half (the Mann-Whitney form). Empty when all
/// labels agree. Throws EmptyInput on an empty list.
std::optional<double> auc_roc(const std::vector<LabeledScore>& scores);

/// Bins a generated query by sub-unit count: 0-15 Short, 16-25 Medium, 26 and
/// above Long. Whitespace and comments do not count.
LengthBin length_bin(const std::string& generated_sql);

/// Bins by schema-link weight |tables| + |columns| + |values|: 0-5 Low,
/// 6-9 Moderate, 10 and above High.
HeavinessBin heaviness_bin(const std::string& generated_sql);

/// Full strata for a generated query; difficulty defaults to "unknown" when
/// the dataset provides none.
Strata stratify(const std::string& generated_sql, const std::optional<std::string>& difficulty);

/// Aggregate metrics plus per-stratum breakdowns over every stratum present.
CalibrationReport build_report(const std::vector<LabeledScore>& scores, int ece_bins = 10);

const char* to_string(LengthBin bin);
const char* to_string(HeavinessBin bin);

}  // namespace sqlconf
