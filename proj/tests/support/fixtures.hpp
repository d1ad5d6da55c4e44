#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sqlconf/run_config.hpp"

namespace sqlconf::testing {

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

enum class Category { Correct, WrongExecutable, NonExecutable };

/// One corpus entry: the question, the gold query, the query the "model"
/// produced, and the consistency samples recorded for it.
struct FixtureExample {
  std::string question;
  std::string gold_sql;
  std::string primary_sql;
  Category category;
  std::vector<std::string> sample_sqls;
};

/// The 20-query corpus over the concert database: indices 0-11 correct,
/// 12-15 executable but wrong, 16-19 non-executable. Token probabilities are
/// adversarial: excludable whitespace carries low mass on correct queries and
/// high mass on incorrect ones, and the non-executable queries score high, so
/// exclusion and grounding both have measurable work to do.
const std::vector<FixtureExample>& fixture_examples();

/// Writes the two-table concert database (8 singers, 10 concerts).
void make_concert_db(const std::filesystem::path& file);

struct FixtureSet {
  std::filesystem::path root;
  std::filesystem::path config_file;
  RunConfig config;
};

/// Builds a complete offline evaluation fixture under `dir`: database,
/// Spider-format dataset, fully recorded response cache covering every
/// request the pipeline will make, and a config file wired for replay.
FixtureSet build_fixture_set(const std::filesystem::path& dir);

}  // namespace sqlconf::testing
