#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sqlconf/token_record.hpp"

namespace sqlconf {

enum class DatasetFormat { Spider, Bird };

struct EvalExample {
  std::string id;
  std::string question;
  std::string gold_sql;
  std::string db_id;
  std::optional<std::string> difficulty;
  std::optional<std::string> evidence;  // external knowledge, when the set has it
};

/// Loads a JSON-array evaluation set. Spider records carry {question, query,
/// db_id}; Bird records carry {question, SQL, db_id, difficulty, evidence}.
/// Missing ids are synthesized as "<format>-<index>". Throws FormatError with
/// the offending record index.
std::vector<EvalExample> load_dataset(const std::filesystem::path& path,
                                      DatasetFormat format);

/// Locates the SQLite file for a database id under the dataset root, trying
/// `<root>/<id>/<id>.sqlite`, then `.db` variants and flat layouts. Throws
/// DatasetError when nothing exists.
std::filesystem::path resolve_db_path(const std::filesystem::path& db_root,
                                      const std::string& db_id);

/// Byte range of the SQL statement inside a model response.
struct SqlSpan {
  size_t begin = 0;
  size_t end = 0;
};

/// Finds the SQL inside a response: text after the first "SQL Query:" marker
/// up to the next "Confidence:" marker or end of text, trimmed, with wrapping
/// code fences excluded from the span. With no marker, falls back to the
/// longest suffix whose first lexeme is the keyword SELECT or WITH. Throws
/// NoSqlFound when neither rule yields anything.
SqlSpan extract_sql_span(const std::string& response_text);
std::string extract_sql(const std::string& response_text);

/// Restricts response tokens to a byte span. Token texts concatenate to the
/// response, so offsets identify each token's range; tokens overlapping the
/// span are kept with boundary tokens trimmed to it (probabilities unchanged),
/// and zero-width tokens strictly inside the span are kept.
std::vector<TokenRecord> slice_tokens(const std::vector<TokenRecord>& tokens,
                                      size_t begin, size_t end);

DatasetFormat parse_dataset_format(const std::string& name);
std::string to_string(DatasetFormat format);

}  // namespace sqlconf
