#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sqlconf/logit_scoring.hpp"

namespace sqlconf {

enum class ExecStatus { Ok, SqlError, Timeout };

/// One result cell, canonicalized: integers exact, reals rounded to 1e-6
/// (and folded to integers when integral), text and blobs byte-preserved,
/// NULL distinct from every value.
struct Cell {
  enum class Type { Null, Integer, Real, Text, Blob };
  Type type = Type::Null;
  int64_t integer = 0;
  double real = 0.0;
  std::string text;

  auto operator<=>(const Cell&) const = default;
};

using Row = std::vector<Cell>;

struct ExecResult {
  ExecStatus status = ExecStatus::SqlError;
  std::vector<Row> rows;
  std::string error_text;
  std::chrono::milliseconds elapsed{0};

  bool ok() const { return status == ExecStatus::Ok; }
};

/// Column names plus up to three sample rows, for prompt schema blocks.
struct TableInfo {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> sample_rows;
};

/// Read-only handle on a SQLite database. Statements that would write are
/// rejected before execution; executions on one handle are serialized, so a
/// handle may be shared across threads.
class Database {
 public:
  static Database open_read_only(const std::filesystem::path& path);
  ~Database();
  Database(Database&&) noexcept;
  Database& operator=(Database&&) noexcept;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;

  /// Runs `sql` and collects the final statement's rows. Never throws for SQL
  /// trouble: errors and timeouts come back in the result status.
  ExecResult execute(const std::string& sql,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

  /// Tables with their columns and the first three rows of each.
  std::vector<TableInfo> describe();

 private:
  Database() = default;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Multiset row equality. Results that failed never compare equal, even to an
/// identical failure.
bool results_equal(const ExecResult& a, const ExecResult& b);

/// Execution-accuracy label: does the generated query return the gold query's
/// multiset of rows? Throws DatasetError when the gold query itself fails.
bool label(Database& db, const std::string& generated_sql, const std::string& gold_sql,
           std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

/// Execution grounding: when enabled and the query did not execute cleanly,
/// the confidence collapses to 0. Idempotent.
MethodScore ground(MethodScore score, const ExecResult& execution, bool grounding_enabled);

}  // namespace sqlconf
