#include "support/fixtures.hpp"

#include <sqlite3.h>
#include <stdlib.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sqlconf/dataset.hpp"
#include "sqlconf/lexer.hpp"
#include "sqlconf/llm_gateway.hpp"
#include "sqlconf/pipeline.hpp"
#include "sqlconf/sql_exec.hpp"
#include "sqlconf/verbalized.hpp"

namespace sqlconf::testing {

TempDir::TempDir() {
  std::string pattern =
      (std::filesystem::temp_directory_path() / "sqlconf-XXXXXX").string();
  std::vector<char> buffer(pattern.begin(), pattern.end());
  buffer.push_back('\0');
  if (mkdtemp(buffer.data()) == nullptr) {
    throw std::runtime_error("mkdtemp failed for " + pattern);
  }
  path_ = buffer.data();
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void make_concert_db(const std::filesystem::path& file) {
  std::filesystem::create_directories(file.parent_path());
  sqlite3* db = nullptr;
  if (sqlite3_open(file.string().c_str(), &db) != SQLITE_OK) {
    std::string what = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw std::runtime_error("cannot create fixture database: " + what);
  }
  static const char* kScript = R"sql(
    BEGIN;
    DROP TABLE IF EXISTS singer;
    DROP TABLE IF EXISTS concert;
    CREATE TABLE singer (id INTEGER PRIMARY KEY, name TEXT, country TEXT, age INTEGER);
    CREATE TABLE concert (id INTEGER PRIMARY KEY, name TEXT, year INTEGER, singer_id INTEGER);
    INSERT INTO singer VALUES
      (1, 'Joe Sharp', 'Netherlands', 52),
      (2, 'Timbaland', 'United States', 32),
      (3, 'Justin Brown', 'France', 29),
      (4, 'Rose White', 'France', 41),
      (5, 'John Nizinik', 'France', 43),
      (6, 'Tribal King', 'France', 25),
      (7, 'Mary Lee', 'United States', 36),
      (8, 'Ana Silva', 'Brazil', 27);
    INSERT INTO concert VALUES
      (1, 'Auditions', 2014, 1),
      (2, 'Super bootcamp', 2014, 2),
      (3, 'Home Visits', 2015, 3),
      (4, 'Week 1', 2014, 4),
      (5, 'Week 2', 2015, 5),
      (6, 'Final', 2015, 6),
      (7, 'Encore', 2016, 2),
      (8, 'Kickoff', 2013, 7),
      (9, 'Gala Night', 2016, 8),
      (10, 'Closing', 2015, 3);
    COMMIT;
  )sql";
  char* error = nullptr;
  if (sqlite3_exec(db, kScript, nullptr, nullptr, &error) != SQLITE_OK) {
    std::string what = error ? error : "unknown";
    sqlite3_free(error);
    sqlite3_close(db);
    throw std::runtime_error("fixture database script failed: " + what);
  }
  sqlite3_close(db);
}

namespace {

FixtureExample correct(std::string question, std::string sql) {
  FixtureExample example;
  example.question = std::move(question);
  example.gold_sql = std::move(sql);
  example.primary_sql = example.gold_sql;
  example.category = Category::Correct;
  example.sample_sqls = {example.primary_sql, example.primary_sql,
                         example.primary_sql, example.primary_sql};
  return example;
}

FixtureExample wrong(std::string question, std::string gold, std::string primary) {
  FixtureExample example;
  example.question = std::move(question);
  example.gold_sql = std::move(gold);
  example.primary_sql = std::move(primary);
  example.category = Category::WrongExecutable;
  example.sample_sqls = {example.primary_sql, example.primary_sql,
                         example.gold_sql, example.gold_sql};
  return example;
}

FixtureExample broken(std::string question, std::string gold, std::string primary) {
  FixtureExample example;
  example.question = std::move(question);
  example.gold_sql = std::move(gold);
  example.primary_sql = std::move(primary);
  example.category = Category::NonExecutable;
  example.sample_sqls = {example.gold_sql, example.gold_sql, example.gold_sql,
                         example.gold_sql};
  return example;
}

}  // namespace

const std::vector<FixtureExample>& fixture_examples() {
  static const std::vector<FixtureExample> kExamples = {
      correct("How many singers do we have?", "SELECT COUNT(*) FROM singer"),
      correct("List the names of all singers.", "SELECT name FROM singer"),
      correct("What are the names of singers older than 40?",
              "SELECT name FROM singer WHERE age > 40"),
      correct("Show names and countries of French singers older than 20, by name.",
              "SELECT name, country FROM singer WHERE country = 'France' AND age > 20 "
              "ORDER BY name"),
      correct("How many concerts happened in each year, newest first?",
              "SELECT year, COUNT(*) FROM concert GROUP BY year ORDER BY year DESC"),
      correct("Which singers performed after 2014, and in how many concerts?",
              "SELECT T1.name, COUNT(T2.id) FROM singer AS T1 JOIN concert AS T2 "
              "ON T1.id = T2.singer_id WHERE T2.year > 2014 GROUP BY T1.name"),
      correct("What is the average age of singers?", "SELECT AVG(age) FROM singer"),
      correct("List concert names and years strictly between 2013 and 2017.",
              "SELECT name, year FROM concert WHERE year > 2013 AND year < 2017 "
              "ORDER BY year DESC"),
      correct("How many different countries are singers from?",
              "SELECT COUNT(DISTINCT country) FROM singer"),
      correct("Per country, count singers aged 20-60 where more than one, by count.",
              "SELECT country, COUNT(*), AVG(age) FROM singer WHERE age > 20 AND "
              "age < 60 GROUP BY country HAVING COUNT(*) > 1 ORDER BY COUNT(*) DESC"),
      correct("List singers from France or Brazil in several age brackets.",
              "SELECT name, country, age FROM singer WHERE country = 'France' OR "
              "country = 'Brazil' AND age > 25 AND age < 45 OR age = 50 OR age = 33"),
      correct("List concert names for 2015.",
              "SELECT name FROM concert WHERE year = 2015"),
      wrong("What are the names of singers younger than 30?",
            "SELECT name FROM singer WHERE age < 30",
            "SELECT name FROM singer WHERE age > 30"),
      wrong("How many concerts were there in 2014?",
            "SELECT COUNT(*) FROM concert WHERE year = 2014",
            "SELECT COUNT(*) FROM concert WHERE year = 2015"),
      wrong("List names of singers from the United States.",
            "SELECT name FROM singer WHERE country = 'United States'",
            "SELECT name FROM singer WHERE country = 'France'"),
      wrong("Show the names of singers who performed in 2014 concerts.",
            "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.id = "
            "T2.singer_id WHERE T2.year = 2014",
            "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.id = "
            "T2.singer_id WHERE T2.year = 2016"),
      broken("What is the total number of concerts?", "SELECT COUNT(*) FROM concert",
             "SELECT COUNT( FROM concerts_xyz"),
      broken("List the oldest singer's name.",
             "SELECT name FROM singer ORDER BY age DESC LIMIT 1",
             "SELECT name FROM singer ORDER BY DESC age LIMIT"),
      broken("How many singers are from Brazil?",
             "SELECT COUNT(*) FROM singer WHERE country = 'Brazil'",
             "SELECT COUNT(*) FROM WHERE country = 'Brazil'"),
      broken("What is the newest concert year?", "SELECT MAX(year) FROM concert",
             "SELECT MAX(year FROM concert"),
  };
  return kExamples;
}

namespace {

using nlohmann::json;

double lexeme_token_prob(const Lexeme& lexeme, Category category, size_t index) {
  if (lexeme.kind == LexemeKind::Whitespace || lexeme.kind == LexemeKind::Comment) {
    return category == Category::Correct ? 0.30 : 0.995;
  }
  double base = category == Category::Correct            ? 0.94
                : category == Category::WrongExecutable  ? 0.55
                                                          : 0.98;
  return base - 0.002 * static_cast<double>(index % 5);
}

/// One token per SQL sub-unit, plus one token each for the response prefix
/// and suffix, so the stream concatenates to the full response text.
std::vector<TokenRecord> primary_tokens(const std::string& response_text,
                                        const FixtureExample& example) {
  SqlSpan span = extract_sql_span(response_text);
  const std::string sql = response_text.substr(span.begin, span.end - span.begin);
  if (sql != example.primary_sql) {
    throw std::logic_error("fixture extraction drifted: \"" + sql + "\"");
  }
  std::vector<TokenRecord> tokens;
  if (span.begin > 0) {
    tokens.push_back({response_text.substr(0, span.begin), 1.0, {}});
  }
  size_t index = 0;
  for (const Lexeme& lexeme : lex_sql(sql)) {
    TokenRecord token;
    token.text = lexeme.text;
    token.prob = lexeme_token_prob(lexeme, example.category, index++);
    token.candidates.push_back({token.text, token.prob});
    if (lexeme.kind == LexemeKind::Keyword) {
      std::string lower = lexeme.text;
      std::transform(lower.begin(), lower.end(), lower.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      if (lower != lexeme.text) token.candidates.push_back({lower, 0.02});
    }
    tokens.push_back(std::move(token));
  }
  if (span.end < response_text.size()) {
    tokens.push_back({response_text.substr(span.end), 1.0, {}});
  }
  return tokens;
}

void write_dataset(const std::filesystem::path& file) {
  json records = json::array();
  for (const FixtureExample& example : fixture_examples()) {
    records.push_back({{"question", example.question},
                       {"query", example.gold_sql},
                       {"db_id", "concert_db"}});
  }
  std::ofstream out(file, std::ios::binary);
  out << records.dump(2) << '\n';
}

void write_config(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  out << "dataset = dataset.json\n"
         "dataset_format = spider\n"
         "db_root = db\n"
         "cache = cache.jsonl\n"
         "output_dir = out\n"
         "mode = replay\n"
         "methods = ftc-product, ftc-average, slc-product, slc-average, "
         "sac-product, sac-average, consistency-execution, consistency-schema, "
         "consistency-embedding, verbalized-vanilla, verbalized-cot, "
         "verbalized-augcot, self-check\n"
         "n_samples = 4\n"
         "temperature = 0.7\n"
         "grounding = false\n"
         "ece_bins = 10\n"
         "seed = 7\n"
         "workers = 2\n"
         "model = fixture-model\n"
         "max_tokens = 256\n";
}

int vanilla_confidence(Category category, size_t index) {
  switch (category) {
    case Category::Correct:
      return 84 + static_cast<int>(index % 4);
    case Category::WrongExecutable:
      return 58 + static_cast<int>(index % 3);
    case Category::NonExecutable:
      return 90;
  }
  return 50;
}

int cot_confidence(Category category, size_t index) {
  switch (category) {
    case Category::Correct:
      return 78 + static_cast<int>(index % 4);
    case Category::WrongExecutable:
      return 52 + static_cast<int>(index % 3);
    case Category::NonExecutable:
      return 86;
  }
  return 50;
}

int augcot_confidence(Category category) {
  switch (category) {
    case Category::Correct:
      return 88;
    case Category::WrongExecutable:
      return 40;
    case Category::NonExecutable:
      return 15;
  }
  return 50;
}

}  // namespace

FixtureSet build_fixture_set(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  make_concert_db(dir / "db" / "concert_db" / "concert_db.sqlite");
  write_dataset(dir / "dataset.json");
  write_config(dir / "config.txt");
  {
    std::ofstream touch(dir / "cache.jsonl", std::ios::binary);
  }

  FixtureSet set;
  set.root = dir;
  set.config_file = dir / "config.txt";
  set.config = load_run_config(set.config_file);

  const RunConfig& config = set.config;
  std::vector<EvalExample> examples = load_dataset(config.dataset, config.dataset_format);
  Database db = Database::open_read_only(resolve_db_path(config.db_root, "concert_db"));
  const std::string schema_text = serialize_schema(db.describe());
  ResponseCache cache = ResponseCache::open(config.cache_path);
  const auto timeout = std::chrono::milliseconds(config.exec_timeout_ms);

  for (size_t i = 0; i < examples.size(); ++i) {
    const FixtureExample& fx = fixture_examples()[i];
    const EvalExample& example = examples[i];

    GenerationRequest primary_request = build_primary_request(config, example, schema_text);
    GenerationResponse primary_response;
    primary_response.text = "SQL Query: " + fx.primary_sql + "\nConfidence: " +
                            std::to_string(vanilla_confidence(fx.category, i));
    primary_response.tokens = primary_tokens(primary_response.text, fx);
    cache.append(request_key(primary_request), primary_request, primary_response);

    for (int s = 1; s <= config.n_samples; ++s) {
      GenerationRequest sample_request =
          build_sample_request(config, example, schema_text, s);
      GenerationResponse sample_response;
      sample_response.text =
          "SQL Query: " + fx.sample_sqls[static_cast<size_t>(s - 1)] + "\nConfidence: 80";
      cache.append(request_key(sample_request), sample_request, sample_response);
    }

    ExecResult exec = db.execute(fx.primary_sql, timeout);

    GenerationRequest vanilla_request = build_verbalized_request(
        config, example, schema_text, VerbalizedMethod::Vanilla);
    GenerationResponse vanilla_response;
    vanilla_response.text = "SQL Query: " + fx.primary_sql + "\nConfidence: " +
                            std::to_string(vanilla_confidence(fx.category, i));
    cache.append(request_key(vanilla_request), vanilla_request, vanilla_response);

    GenerationRequest cot_request =
        build_verbalized_request(config, example, schema_text, VerbalizedMethod::CoT);
    GenerationResponse cot_response;
    cot_response.text =
        "Scratchpad: the schema covers the question directly.\nSQL Query: " +
        fx.primary_sql + "\nConfidence: " + std::to_string(cot_confidence(fx.category, i));
    cache.append(request_key(cot_request), cot_request, cot_response);

    GenerationRequest augcot_request = build_verbalized_request(
        config, example, schema_text, VerbalizedMethod::AugCoT, fx.primary_sql,
        exec.ok() ? exec.rows : std::vector<Row>{});
    GenerationResponse augcot_response;
    augcot_response.text =
        "Scratchpad: judged against the printed execution result.\nConfidence: " +
        std::to_string(augcot_confidence(fx.category));
    cache.append(request_key(augcot_request), augcot_request, augcot_response);

    GenerationRequest check_request = build_verbalized_request(
        config, example, schema_text, VerbalizedMethod::SelfCheck, fx.primary_sql);
    GenerationResponse check_response;
    check_response.text = fx.category == Category::Correct ? "(T)" : "(F)";
    cache.append(request_key(check_request), check_request, check_response);
  }
  return set;
}

}  // namespace sqlconf::testing
