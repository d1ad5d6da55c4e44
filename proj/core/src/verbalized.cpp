#include "sqlconf/verbalized.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "sqlconf/errors.hpp"

namespace sqlconf {

namespace detail {
extern const char kTemplate_vanilla[];
extern const char kTemplate_cot[];
extern const char kTemplate_aug_cot[];
extern const char kTemplate_self_check[];
}  // namespace detail

namespace {

constexpr const char* kFileNames[4] = {"vanilla.txt", "cot.txt", "aug_cot.txt",
                                       "self_check.txt"};

void replace_all(std::string& text, std::string_view placeholder, std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
}

std::string cell_text(const Cell& c) {
  switch (c.type) {
    case Cell::Type::Null:
      return "NULL";
    case Cell::Type::Integer: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(c.integer));
      return buf;
    }
    case Cell::Type::Real: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.15g", c.real);
      return buf;
    }
    default:
      return c.text;
  }
}

}  // namespace

TemplateSet TemplateSet::builtin() {
  TemplateSet ts;
  ts.templates_[0] = detail::kTemplate_vanilla;
  ts.templates_[1] = detail::kTemplate_cot;
  ts.templates_[2] = detail::kTemplate_aug_cot;
  ts.templates_[3] = detail::kTemplate_self_check;
  return ts;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet ts;
  for (int i = 0; i < 4; ++i) {
    const std::filesystem::path path = dir / kFileNames[i];
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    ts.templates_[i] = buf.str();
  }
  return ts;
}

const std::string& TemplateSet::text(VerbalizedMethod method) const {
  return templates_[static_cast<int>(method)];
}

std::string serialize_schema(const std::vector<TableInfo>& tables) {
  std::string out;
  for (const TableInfo& t : tables) {
    if (!out.empty()) out += "\n";
    out += "Table " + t.name + ", columns = [";
    for (size_t i = 0; i < t.columns.size(); ++i) {
      if (i) out += ", ";
      out += t.columns[i];
    }
    out += "]\n";
    size_t rows = 0;
    for (const auto& row : t.sample_rows) {
      if (rows++ == 3) break;
      std::string line;
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) line += " | ";
        line += row[i];
      }
      out += line + "\n";
    }
  }
  return out;
}

std::string serialize_execution_result(const std::vector<Row>& rows, size_t limit) {
  std::string out;
  std::set<std::string> seen;
  for (const Row& row : rows) {
    std::string line;
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) line += " | ";
      line += cell_text(row[i]);
    }
    if (!seen.insert(line).second) continue;  // distinct rows only
    out += line + "\n";
    if (seen.size() == limit) break;
  }
  if (out.empty()) out = "(no rows)\n";
  return out;
}

PromptBundle build_prompt(const TemplateSet& templates, VerbalizedMethod method,
                          const std::string& question, const std::string& schema_text,
                          const std::optional<std::string>& sql_query,
                          const std::optional<std::vector<Row>>& execution_rows) {
  if (method == VerbalizedMethod::AugCoT && !execution_rows) {
    throw MissingExecutionResult("execution-grounded prompt needs execution rows");
  }
  if (method != VerbalizedMethod::AugCoT && execution_rows) {
    throw std::invalid_argument(std::string(to_string(method)) +
                                " prompts take no execution result");
  }
  if ((method == VerbalizedMethod::AugCoT || method == VerbalizedMethod::SelfCheck) &&
      !sql_query) {
    throw MissingSqlQuery(std::string(to_string(method)) + " prompts need the SQL query");
  }

  PromptBundle bundle;
  bundle.method = method;
  bundle.user_text = templates.text(method);
  replace_all(bundle.user_text, "{{TABLE_SCHEMA}}", schema_text);
  replace_all(bundle.user_text, "{{QUESTION}}", question);
  if (sql_query) replace_all(bundle.user_text, "{{SQL_QUERY}}", *sql_query);
  if (execution_rows) {
    replace_all(bundle.user_text, "{{EXECUTION_RESULT}}",
                serialize_execution_result(*execution_rows));
  }
  return bundle;
}

std::optional<double> parse_confidence(const std::string& response_text) {
  static const std::regex line_re(R"(^\s*.*?Confidence:\s*([+-]?[0-9]+(?:\.[0-9]+)?)\s*$)",
                                  std::regex::icase);
  std::optional<double> result;
  std::istringstream stream(response_text);
  std::string line;
  while (std::getline(stream, line)) {
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      double raw = 0.0;
      try {
        raw = std::stod(m[1].str());
      } catch (const std::out_of_range&) {
        result.reset();
        continue;
      }
      if (raw >= 0.0 && raw <= 100.0) {
        result = raw / 100.0;
      } else {
        result.reset();  // the last marker governs, valid or not
      }
    }
  }
  return result;
}

std::optional<double> parse_self_check(const std::string& response_text) {
  std::istringstream stream(response_text);
  std::string token;
  while (stream >> token) {
    // Trim trailing sentence punctuation: "(T)." means (T).
    while (!token.empty() && (token.back() == '.' || token.back() == ',' ||
                              token.back() == ';' || token.back() == ':' ||
                              token.back() == '!')) {
      token.pop_back();
    }
    if (token == "T" || token == "(T)") return 1.0;
    if (token == "F" || token == "(F)") return 0.0;
  }
  return std::nullopt;
}

const char* to_string(VerbalizedMethod method) {
  switch (method) {
    case VerbalizedMethod::Vanilla: return "vanilla";
    case VerbalizedMethod::CoT: return "cot";
    case VerbalizedMethod::AugCoT: return "augcot";
    case VerbalizedMethod::SelfCheck: return "self-check";
  }
  return "?";
}

}  // namespace sqlconf
