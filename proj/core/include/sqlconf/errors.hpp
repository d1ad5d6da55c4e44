#pragma once

#include <stdexcept>
#include <string>

namespace sqlconf {

/// Token stream and SQL text disagree; carries both sides for diagnosis.
struct AlignmentMismatch : std::runtime_error {
  explicit AlignmentMismatch(const std::string& what) : std::runtime_error(what) {}
};

/// A scoring method selected zero lexemes and the caller opted into hard errors.
struct EmptySelection : std::runtime_error {
  explicit EmptySelection(const std::string& what) : std::runtime_error(what) {}
};

/// Replay-mode generation request missing from the response cache.
struct CacheMiss : std::runtime_error {
  explicit CacheMiss(const std::string& key)
      : std::runtime_error("no cached response for key " + key), request_key(key) {}
  std::string request_key;
};

/// Upstream model endpoint failed after retries (or non-retryably).
struct ProviderError : std::runtime_error {
  ProviderError(const std::string& what, int status, double retry_after_s = 0)
      : std::runtime_error(what), http_status(status), retry_after_seconds(retry_after_s) {}
  int http_status = 0;             // 0 when no HTTP response was received
  double retry_after_seconds = 0;  // from the Retry-After header when present
};

/// Embedding backend unreachable or returned unusable vectors.
struct EmbedderUnavailable : std::runtime_error {
  explicit EmbedderUnavailable(const std::string& what) : std::runtime_error(what) {}
};

/// Dataset record missing required fields or not of the declared shape.
struct FormatError : std::runtime_error {
  FormatError(const std::string& what, size_t index)
      : std::runtime_error(what), record_index(index) {}
  size_t record_index = 0;
};

/// Gold query failed to execute (or a database file is unusable).
struct DatasetError : std::runtime_error {
  explicit DatasetError(const std::string& what) : std::runtime_error(what) {}
};

/// A prompt template required an execution result that was not supplied.
struct MissingExecutionResult : std::runtime_error {
  explicit MissingExecutionResult(const std::string& what) : std::runtime_error(what) {}
};

/// A prompt template required the generated SQL but none was supplied.
struct MissingSqlQuery : std::runtime_error {
  explicit MissingSqlQuery(const std::string& what) : std::runtime_error(what) {}
};

/// A model response contained no extractable SQL statement.
struct NoSqlFound : std::runtime_error {
  explicit NoSqlFound(const std::string& what) : std::runtime_error(what) {}
};

/// Run configuration file unreadable, malformed, or inconsistent.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Metric requested over an empty input.
struct EmptyInput : std::runtime_error {
  explicit EmptyInput(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sqlconf
