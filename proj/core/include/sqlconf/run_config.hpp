#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sqlconf/consistency.hpp"
#include "sqlconf/dataset.hpp"
#include "sqlconf/llm_gateway.hpp"
#include "sqlconf/logit_scoring.hpp"
#include "sqlconf/verbalized.hpp"

namespace sqlconf {

/// Names one confidence method to evaluate, e.g. "sac-average",
/// "consistency-execution", "verbalized-cot", "self-check".
struct MethodSelector {
  enum class Family { Logit, Consistency, Verbalized };

  Family family = Family::Logit;
  ScoringMethod scoring = ScoringMethod::Ftc;
  Aggregation aggregation = Aggregation::Product;
  ClusterMethod cluster = ClusterMethod::Execution;
  VerbalizedMethod verbalized = VerbalizedMethod::Vanilla;

  /// Canonical name; parse(name()).name() == name().
  std::string name() const;
  static MethodSelector parse(const std::string& text);

  bool operator==(const MethodSelector& other) const {
    return name() == other.name();
  }
};

struct RunConfig {
  std::filesystem::path dataset;
  DatasetFormat dataset_format = DatasetFormat::Spider;
  std::filesystem::path db_root;
  std::vector<MethodSelector> methods;
  FoldingConfig folding;
  int n_samples = 10;        // consistency samples per example
  double temperature = 1.0;  // sampling temperature for those samples
  bool grounding = false;
  GatewayMode mode = GatewayMode::Replay;
  std::filesystem::path cache_path;
  std::filesystem::path output_dir;
  int ece_bins = 10;
  uint64_t seed = 0;
  int workers = 0;  // 0 = hardware concurrency
  std::string model = "gpt-3.5-turbo";
  std::string provider_url;
  std::string provider_token;
  std::string embed_url;
  std::string embed_model;
  std::string embed_token;
  double embed_threshold = 0.92;
  int max_tokens = 512;
  int exec_timeout_ms = 30000;
  bool use_evidence = true;        // append Bird evidence to the question
  double failure_threshold = 0.0;  // tolerated per-example failure fraction
  bool degenerate_is_error = false;
};

/// Parses the flat `key = value` config format ('#' comments, blank lines
/// skipped). Unknown keys throw ConfigError naming the key and line.
RunConfig parse_run_config(const std::string& text);

/// parse_run_config over a file, plus environment overrides
/// (SQLCONF_PROVIDER_URL, SQLCONF_PROVIDER_TOKEN, SQLCONF_EMBED_URL,
/// SQLCONF_EMBED_TOKEN) and validation: replay mode requires the cache file
/// to exist, bins and sample counts must be positive.
RunConfig load_run_config(const std::filesystem::path& path);

void validate_run_config(const RunConfig& config);

}  // namespace sqlconf
