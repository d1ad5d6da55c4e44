#include "sqlconf/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sqlconf/errors.hpp"
#include "sqlconf/lexer.hpp"

namespace sqlconf {

using nlohmann::json;

namespace {

std::string require_string(const json& record, const char* field, size_t index) {
  if (!record.contains(field) || !record.at(field).is_string() ||
      record.at(field).get<std::string>().empty()) {
    char msg[128];
    std::snprintf(msg, sizeof(msg), "record %zu: missing or empty field \"%s\"",
                  index, field);
    throw FormatError(msg, index);
  }
  return record.at(field).get<std::string>();
}

std::optional<std::string> optional_string(const json& record, const char* field) {
  if (!record.contains(field) || !record.at(field).is_string()) return std::nullopt;
  std::string value = record.at(field).get<std::string>();
  if (value.empty()) return std::nullopt;
  return value;
}

/// Case-insensitive search for a marker, returning npos when absent.
size_t find_icase(const std::string& haystack, const std::string& needle, size_t from) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string::npos;
  auto lower = [](unsigned char c) { return std::tolower(c); };
  for (size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    size_t j = 0;
    while (j < needle.size() && lower(haystack[i + j]) == lower(needle[j])) ++j;
    if (j == needle.size()) return i;
  }
  return std::string::npos;
}

bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

void trim_span(const std::string& text, size_t& begin, size_t& end) {
  while (begin < end && is_space_byte(text[begin])) ++begin;
  while (end > begin && is_space_byte(text[end - 1])) --end;
}

/// Narrows a span so that wrapping code fences fall outside it. Fences are
/// ``` (with an optional language tag on the opening line) or single backtick
/// pairs; stripping moves the boundaries rather than editing the text so the
/// SQL stays a contiguous byte range of the response.
void strip_fences(const std::string& text, size_t& begin, size_t& end) {
  trim_span(text, begin, end);
  bool changed = true;
  while (changed) {
    changed = false;
    if (end - begin >= 3 && text.compare(begin, 3, "```") == 0) {
      size_t line_end = text.find('\n', begin);
      begin = (line_end == std::string::npos || line_end >= end) ? begin + 3
                                                                 : line_end + 1;
      changed = true;
    }
    if (end - begin >= 3 && text.compare(end - 3, 3, "```") == 0) {
      end -= 3;
      changed = true;
    }
    if (!changed && end - begin >= 2 && text[begin] == '`' && text[end - 1] == '`') {
      ++begin;
      --end;
      changed = true;
    }
    trim_span(text, begin, end);
  }
}

/// Copy of the text with ``` fence delimiters (and their language tags)
/// blanked out. Backticks otherwise read as identifier quotes, which would
/// hide a fenced query from the keyword scan; blanking keeps byte offsets
/// aligned with the original response.
std::string mask_fence_delimiters(const std::string& text) {
  std::string masked = text;
  size_t pos = 0;
  while ((pos = masked.find("```", pos)) != std::string::npos) {
    size_t delim_end = pos + 3;
    while (delim_end < masked.size() && !is_space_byte(masked[delim_end])) {
      ++delim_end;
    }
    for (size_t i = pos; i < delim_end; ++i) masked[i] = ' ';
    pos = delim_end;
  }
  return masked;
}

/// First lexeme at or after `from` that is the keyword SELECT or WITH.
size_t first_query_keyword(const std::string& text, size_t from) {
  for (const Lexeme& lexeme : lex_sql(text)) {
    if (lexeme.byte_start < from) continue;
    if (lexeme.kind != LexemeKind::Keyword) continue;
    std::string upper = lexeme.text;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (upper == "SELECT" || upper == "WITH") return lexeme.byte_start;
  }
  return std::string::npos;
}

}  // namespace

std::vector<EvalExample> load_dataset(const std::filesystem::path& path,
                                      DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) {
    throw FormatError("cannot open dataset file: " + path.string(), 0);
  }
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded() || !root.is_array()) {
    throw FormatError("dataset is not a JSON array: " + path.string(), 0);
  }
  const char* sql_field = format == DatasetFormat::Spider ? "query" : "SQL";
  std::vector<EvalExample> examples;
  examples.reserve(root.size());
  for (size_t i = 0; i < root.size(); ++i) {
    const json& record = root.at(i);
    if (!record.is_object()) {
      char msg[64];
      std::snprintf(msg, sizeof(msg), "record %zu: not an object", i);
      throw FormatError(msg, i);
    }
    EvalExample example;
    example.question = require_string(record, "question", i);
    example.gold_sql = require_string(record, sql_field, i);
    example.db_id = require_string(record, "db_id", i);
    if (auto id = optional_string(record, "id")) {
      example.id = *id;
    } else {
      example.id = to_string(format) + "-" + std::to_string(i);
    }
    if (format == DatasetFormat::Bird) {
      example.difficulty = optional_string(record, "difficulty");
      example.evidence = optional_string(record, "evidence");
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

std::filesystem::path resolve_db_path(const std::filesystem::path& db_root,
                                      const std::string& db_id) {
  const std::filesystem::path candidates[] = {
      db_root / db_id / (db_id + ".sqlite"),
      db_root / db_id / (db_id + ".db"),
      db_root / (db_id + ".sqlite"),
      db_root / (db_id + ".db"),
  };
  for (const auto& candidate : candidates) {
    std::error_code ec;
    if (std::filesystem::exists(candidate, ec)) return candidate;
  }
  throw DatasetError("no database file for id \"" + db_id + "\" under " +
                     db_root.string());
}

SqlSpan extract_sql_span(const std::string& response_text) {
  static const std::string kSqlMarker = "SQL Query:";
  static const std::string kConfidenceMarker = "Confidence:";

  size_t marker = find_icase(response_text, kSqlMarker, 0);
  if (marker != std::string::npos) {
    size_t begin = marker + kSqlMarker.size();
    size_t stop = find_icase(response_text, kConfidenceMarker, begin);
    size_t end = stop == std::string::npos ? response_text.size() : stop;
    strip_fences(response_text, begin, end);
    if (begin < end) return {begin, end};
    throw NoSqlFound("empty SQL after \"SQL Query:\" marker");
  }

  const bool fenced = response_text.find("```") != std::string::npos;
  size_t start = fenced ? first_query_keyword(mask_fence_delimiters(response_text), 0)
                        : first_query_keyword(response_text, 0);
  if (start == std::string::npos) {
    throw NoSqlFound("response contains no SQL Query marker and no SELECT/WITH");
  }
  size_t end = response_text.size();
  // A fence opened before the query closes it: cut there instead of at EOF.
  if (find_icase(response_text, "```", 0) < start) {
    size_t closing = response_text.find("```", start);
    if (closing != std::string::npos) end = closing;
  }
  size_t begin = start;
  strip_fences(response_text, begin, end);
  if (begin >= end) {
    throw NoSqlFound("response contains no extractable SQL text");
  }
  return {begin, end};
}

std::string extract_sql(const std::string& response_text) {
  SqlSpan span = extract_sql_span(response_text);
  return response_text.substr(span.begin, span.end - span.begin);
}

std::vector<TokenRecord> slice_tokens(const std::vector<TokenRecord>& tokens,
                                      size_t begin, size_t end) {
  std::vector<TokenRecord> sliced;
  size_t offset = 0;
  for (const TokenRecord& token : tokens) {
    size_t token_begin = offset;
    size_t token_end = offset + token.text.size();
    offset = token_end;
    if (token_begin == token_end) {
      if (token_begin > begin && token_begin < end) sliced.push_back(token);
      continue;
    }
    if (token_end <= begin || token_begin >= end) continue;
    TokenRecord kept = token;
    size_t keep_begin = std::max(token_begin, begin);
    size_t keep_end = std::min(token_end, end);
    kept.text = token.text.substr(keep_begin - token_begin, keep_end - keep_begin);
    sliced.push_back(std::move(kept));
  }
  return sliced;
}

DatasetFormat parse_dataset_format(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "spider") return DatasetFormat::Spider;
  if (lower == "bird") return DatasetFormat::Bird;
  throw ConfigError("unknown dataset format: " + name);
}

std::string to_string(DatasetFormat format) {
  return format == DatasetFormat::Spider ? "spider" : "bird";
}

}  // namespace sqlconf
