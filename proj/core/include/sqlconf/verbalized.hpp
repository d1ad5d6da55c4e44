#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sqlconf/sql_exec.hpp"

namespace sqlconf {

enum class VerbalizedMethod { Vanilla, CoT, AugCoT, SelfCheck };

struct PromptBundle {
  VerbalizedMethod method = VerbalizedMethod::Vanilla;
  std::string system_text;  // empty: these prompts are single user turns
  std::string user_text;
};

/// The four prompt templates. Placeholders: {{TABLE_SCHEMA}}, {{QUESTION}},
/// {{SQL_QUERY}}, {{EXECUTION_RESULT}}.
class TemplateSet {
 public:
  /// Compiled-in copies of the template assets.
  static TemplateSet builtin();
  /// Loads vanilla.txt, cot.txt, aug_cot.txt and self_check.txt from `dir`.
  static TemplateSet load(const std::filesystem::path& dir);

  const std::string& text(VerbalizedMethod method) const;

 private:
  std::string templates_[4];
};

/// "Table <name>, columns = [a, b]" per table, then up to three sample rows
/// as pipe-delimited lines.
std::string serialize_schema(const std::vector<TableInfo>& tables);

/// Pipe-delimited execution rows, truncated to the first `limit` distinct
/// rows (duplicates beyond the first occurrence are dropped).
std::string serialize_execution_result(const std::vector<Row>& rows, size_t limit = 1000);

/// Renders the template for `method`. The schema text and question are always
/// required. AugCoT requires `execution_rows` and throws
/// MissingExecutionResult without them; every other method rejects them.
/// AugCoT and SelfCheck require `sql_query` (MissingSqlQuery otherwise).
/// Deterministic: identical inputs produce byte-identical prompts.
PromptBundle build_prompt(const TemplateSet& templates, VerbalizedMethod method,
                          const std::string& question, const std::string& schema_text,
                          const std::optional<std::string>& sql_query = std::nullopt,
                          const std::optional<std::vector<Row>>& execution_rows = std::nullopt);

/// Confidence from the last line matching "Confidence: <number>", scaled from
/// the 0-100 range to [0, 1]. Out-of-range numbers and missing markers parse
/// to nothing.
std::optional<double> parse_confidence(const std::string& response_text);

/// Self-check verdict: the first standalone T or (T) token means correct
/// (1.0), F or (F) incorrect (0.0).
std::optional<double> parse_self_check(const std::string& response_text);

const char* to_string(VerbalizedMethod method);

}  // namespace sqlconf
