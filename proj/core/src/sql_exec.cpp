#include "sqlconf/sql_exec.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sqlconf/errors.hpp"

namespace sqlconf {
namespace {

Cell make_null() { return Cell{Cell::Type::Null, 0, 0.0, {}}; }

Cell make_integer(int64_t v) { return Cell{Cell::Type::Integer, v, 0.0, {}}; }

// Reals round to 1e-6; integral reals fold to integer cells so 60.0 == 60,
// matching how SQLite itself compares across numeric storage classes.
Cell make_real(double v) {
  const double rounded = std::round(v * 1e6) / 1e6;
  if (std::isfinite(rounded) && rounded == std::rint(rounded) &&
      std::fabs(rounded) <= 9007199254740992.0) {
    return make_integer(static_cast<int64_t>(rounded));
  }
  Cell c{Cell::Type::Real, 0, rounded, {}};
  return c;
}

Cell make_text(std::string v) { return Cell{Cell::Type::Text, 0, 0.0, std::move(v)}; }

Cell make_blob(std::string v) { return Cell{Cell::Type::Blob, 0, 0.0, std::move(v)}; }

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_callback(void* ctx) {
  auto* deadline = static_cast<Deadline*>(ctx);
  if (std::chrono::steady_clock::now() >= deadline->at) {
    deadline->expired = true;
    return 1;  // interrupt the statement
  }
  return 0;
}

}  // namespace

struct Database::Impl {
  sqlite3* db = nullptr;
  std::mutex mutex;
  ~Impl() {
    if (db) sqlite3_close(db);
  }
};

Database::~Database() = default;
Database::Database(Database&&) noexcept = default;
Database& Database::operator=(Database&&) noexcept = default;

Database Database::open_read_only(const std::filesystem::path& path) {
  Database out;
  out.impl_ = std::make_unique<Impl>();
  sqlite3* db = nullptr;
  const int rc = sqlite3_open_v2(path.string().c_str(), &db, SQLITE_OPEN_READONLY, nullptr);
  if (rc != SQLITE_OK) {
    const std::string message = db ? sqlite3_errmsg(db) : "out of memory";
    if (db) sqlite3_close(db);
    throw DatasetError("cannot open database " + path.string() + ": " + message);
  }
  sqlite3_extended_result_codes(db, 1);
  out.impl_->db = db;
  return out;
}

ExecResult Database::execute(const std::string& sql, std::chrono::milliseconds timeout) {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  sqlite3* db = impl_->db;
  const auto started = std::chrono::steady_clock::now();
  Deadline deadline{started + timeout};
  sqlite3_progress_handler(db, 512, progress_callback, &deadline);

  ExecResult result;
  result.status = ExecStatus::Ok;
  const char* tail = sql.c_str();
  const char* end = tail + sql.size();
  bool executed_any = false;
  while (tail < end && result.status == ExecStatus::Ok) {
    sqlite3_stmt* stmt = nullptr;
    const char* next = nullptr;
    const int prc = sqlite3_prepare_v2(db, tail, static_cast<int>(end - tail), &stmt, &next);
    if (prc != SQLITE_OK) {
      result.status = deadline.expired ? ExecStatus::Timeout : ExecStatus::SqlError;
      result.error_text = sqlite3_errmsg(db);
      break;
    }
    tail = next;
    if (!stmt) continue;  // trailing whitespace or comment
    if (!sqlite3_stmt_readonly(stmt)) {
      sqlite3_finalize(stmt);
      result.status = ExecStatus::SqlError;
      result.error_text = "write statement rejected";
      break;
    }

    std::vector<Row> rows;
    int rc = sqlite3_step(stmt);
    while (rc == SQLITE_ROW) {
      const int columns = sqlite3_column_count(stmt);
      Row row;
      row.reserve(static_cast<size_t>(columns));
      for (int c = 0; c < columns; ++c) {
        switch (sqlite3_column_type(stmt, c)) {
          case SQLITE_NULL:
            row.push_back(make_null());
            break;
          case SQLITE_INTEGER:
            row.push_back(make_integer(sqlite3_column_int64(stmt, c)));
            break;
          case SQLITE_FLOAT:
            row.push_back(make_real(sqlite3_column_double(stmt, c)));
            break;
          case SQLITE_BLOB: {
            const auto* data = static_cast<const char*>(sqlite3_column_blob(stmt, c));
            const int size = sqlite3_column_bytes(stmt, c);
            row.push_back(make_blob(std::string(data, data + size)));
            break;
          }
          default: {
            const auto* data = sqlite3_column_text(stmt, c);
            const int size = sqlite3_column_bytes(stmt, c);
            row.push_back(make_text(std::string(reinterpret_cast<const char*>(data),
                                                static_cast<size_t>(size))));
            break;
          }
        }
      }
      rows.push_back(std::move(row));
      rc = sqlite3_step(stmt);
    }
    if (rc != SQLITE_DONE) {
      result.status = deadline.expired ? ExecStatus::Timeout : ExecStatus::SqlError;
      result.error_text = sqlite3_errmsg(db);
    } else if (sqlite3_column_count(stmt) > 0) {
      result.rows = std::move(rows);  // the last row-returning statement wins
      executed_any = true;
    } else {
      executed_any = true;
    }
    sqlite3_finalize(stmt);
  }
  sqlite3_progress_handler(db, 0, nullptr, nullptr);

  if (result.status == ExecStatus::Ok && !executed_any) {
    result.status = ExecStatus::SqlError;
    result.error_text = "empty statement";
  }
  if (result.status != ExecStatus::Ok) result.rows.clear();
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - started);
  return result;
}

std::vector<TableInfo> Database::describe() {
  std::vector<TableInfo> tables;
  ExecResult names = execute(
      "SELECT name FROM sqlite_master WHERE type = 'table' "
      "AND name NOT LIKE 'sqlite_%' ORDER BY rowid");
  if (!names.ok()) throw DatasetError("cannot list tables: " + names.error_text);
  for (const Row& row : names.rows) {
    if (row.empty() || row[0].type != Cell::Type::Text) continue;
    TableInfo info;
    info.name = row[0].text;
    const std::string quoted = "\"" + info.name + "\"";
    ExecResult cols = execute("PRAGMA table_info(" + quoted + ")");
    if (!cols.ok()) throw DatasetError("cannot describe " + info.name + ": " + cols.error_text);
    for (const Row& col : cols.rows) {
      if (col.size() > 1 && col[1].type == Cell::Type::Text) info.columns.push_back(col[1].text);
    }
    ExecResult sample = execute("SELECT * FROM " + quoted + " LIMIT 3");
    if (sample.ok()) {
      for (const Row& r : sample.rows) {
        std::vector<std::string> cells;
        for (const Cell& c : r) {
          switch (c.type) {
            case Cell::Type::Null: cells.emplace_back("NULL"); break;
            case Cell::Type::Integer: {
              char buf[32];
              std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(c.integer));
              cells.emplace_back(buf);
              break;
            }
            case Cell::Type::Real: {
              char buf[40];
              std::snprintf(buf, sizeof buf, "%.15g", c.real);
              cells.emplace_back(buf);
              break;
            }
            default: cells.push_back(c.text); break;
          }
        }
        info.sample_rows.push_back(std::move(cells));
      }
    }
    tables.push_back(std::move(info));
  }
  return tables;
}

bool results_equal(const ExecResult& a, const ExecResult& b) {
  if (!a.ok() || !b.ok()) return false;
  if (a.rows.size() != b.rows.size()) return false;
  std::vector<Row> left = a.rows;
  std::vector<Row> right = b.rows;
  std::sort(left.begin(), left.end());
  std::sort(right.begin(), right.end());
  return left == right;
}

bool label(Database& db, const std::string& generated_sql, const std::string& gold_sql,
           std::chrono::milliseconds timeout) {
  const ExecResult gold = db.execute(gold_sql, timeout);
  if (!gold.ok()) {
    throw DatasetError("gold query failed: " + gold.error_text);
  }
  const ExecResult generated = db.execute(generated_sql, timeout);
  return results_equal(generated, gold);
}

MethodScore ground(MethodScore score, const ExecResult& execution, bool grounding_enabled) {
  if (grounding_enabled && !execution.ok()) score.value = 0.0;
  return score;
}

}  // namespace sqlconf
