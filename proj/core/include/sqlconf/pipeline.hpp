#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqlconf/dataset.hpp"
#include "sqlconf/llm_gateway.hpp"
#include "sqlconf/metrics.hpp"
#include "sqlconf/run_config.hpp"
#include "sqlconf/sql_exec.hpp"
#include "sqlconf/verbalized.hpp"

namespace sqlconf {

/// Everything the run learned about one example. Failed examples keep their
/// row (status and error say why) so every input appears exactly once in the
/// score table.
struct ExampleOutcome {
  std::string id;
  std::string status = "ok";  // ok | no-sql | cache-miss | misaligned | error
  std::string error;
  std::optional<bool> label;
  std::optional<Strata> strata;
  std::string primary_sql;
  /// Method name -> score; a method that failed on this example maps to
  /// nothing and its error is recorded separately.
  std::map<std::string, std::optional<double>> scores;
};

struct MethodError {
  std::string example_id;
  std::string method;  // empty for example-level failures
  std::string error;
};

struct RunResult {
  size_t examples = 0;
  size_t failures = 0;  // examples whose status is not "ok"
  std::vector<ExampleOutcome> outcomes;
  std::vector<MethodError> errors;
  std::map<std::string, CalibrationReport> reports;  // by method name
};

/// The question text as prompts see it: Bird evidence is appended on its own
/// line when present and enabled.
std::string question_block(const RunConfig& config, const EvalExample& example);

/// Deterministic request builders, shared with fixture tooling so recorded
/// cache keys match what a run asks for. The primary request generates the
/// scored query at temperature zero with logprobs; sample requests draw
/// consistency samples at the configured temperature; verbalized requests
/// render the corresponding prompt template.
GenerationRequest build_primary_request(const RunConfig& config, const EvalExample& example,
                                        const std::string& schema_text);
GenerationRequest build_sample_request(const RunConfig& config, const EvalExample& example,
                                       const std::string& schema_text, int sample_index);
GenerationRequest build_verbalized_request(const RunConfig& config, const EvalExample& example,
                                           const std::string& schema_text, VerbalizedMethod method,
                                           const std::optional<std::string>& sql_query = std::nullopt,
                                           const std::optional<std::vector<Row>>& execution_rows = std::nullopt);

/// Full evaluation: load the dataset, score every example with every
/// configured method, label by execution, and write scores.csv,
/// report_<method>.json, strata_<axis>.csv and errors.json under
/// config.output_dir. Per-example failures are recorded and survive; only
/// configuration and dataset problems abort.
RunResult run(const RunConfig& config);

/// The file-writing half of run(), exposed for tools that post-process
/// outcomes. Writes all artifacts into `config.output_dir`.
void write_artifacts(const RunConfig& config, const RunResult& result);

/// Per-method calibration reports over the successful outcomes.
std::map<std::string, CalibrationReport> build_reports(const RunConfig& config,
                                                       const std::vector<ExampleOutcome>& outcomes);

}  // namespace sqlconf
