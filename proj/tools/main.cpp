#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sqlconf/dataset.hpp"
#include "sqlconf/errors.hpp"
#include "sqlconf/lexer.hpp"
#include "sqlconf/llm_gateway.hpp"
#include "sqlconf/logit_scoring.hpp"
#include "sqlconf/metrics.hpp"
#include "sqlconf/pipeline.hpp"
#include "sqlconf/run_config.hpp"
#include "sqlconf/schema_link.hpp"

namespace {

using nlohmann::json;
using namespace sqlconf;

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return buffer.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw ConfigError("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// Token-logprob input: JSON array of {token, logprob, top_logprobs:
/// [{token, logprob}...]}. Probabilities convert from natural logs.
std::vector<TokenRecord> load_logprobs(const std::string& path) {
  json root = json::parse(read_input(path), nullptr, false);
  if (root.is_discarded() || !root.is_array()) {
    throw ConfigError("logprob file is not a JSON array: " + path);
  }
  std::vector<TokenRecord> tokens;
  for (const json& entry : root) {
    TokenRecord record;
    record.text = entry.at("token").get<std::string>();
    record.prob = std::min(1.0, std::exp(entry.at("logprob").get<double>()));
    for (const json& top : entry.value("top_logprobs", json::array())) {
      record.candidates.push_back(
          {top.at("token").get<std::string>(),
           std::min(1.0, std::exp(top.at("logprob").get<double>()))});
    }
    tokens.push_back(std::move(record));
  }
  return tokens;
}

/// Drops whitespace-only tokens at either end and trims the edge tokens, so a
/// trailing newline in one input does not defeat alignment.
void trim_token_edges(std::vector<TokenRecord>& tokens) {
  auto all_space = [](const std::string& text) {
    return text.find_first_not_of(" \t\r\n") == std::string::npos;
  };
  while (!tokens.empty() && all_space(tokens.back().text)) tokens.pop_back();
  while (!tokens.empty() && all_space(tokens.front().text)) tokens.erase(tokens.begin());
  if (!tokens.empty()) {
    std::string& front = tokens.front().text;
    size_t keep = front.find_first_not_of(" \t\r\n");
    if (keep != std::string::npos && keep > 0) front.erase(0, keep);
    std::string& back = tokens.back().text;
    size_t last = back.find_last_not_of(" \t\r\n");
    if (last != std::string::npos) back.erase(last + 1);
  }
}

std::string trim_text(const std::string& text) {
  size_t begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  size_t end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

struct ScoreArgs {
  std::string sql_path;
  std::string logprob_path;
  std::string method = "sac";
  std::string aggregation = "avg";
  bool no_token_exclusion = false;
  bool no_case_folding = false;
  bool no_order_folding = false;
  bool no_synonym_folding = false;
  bool no_equivalent_expressions = false;
  bool include_all_roles = false;
  int top_k = 5;
};

int run_score(const ScoreArgs& args) {
  ScoringMethod method;
  if (args.method == "ftc") {
    method = ScoringMethod::Ftc;
  } else if (args.method == "slc") {
    method = ScoringMethod::Slc;
  } else if (args.method == "sac") {
    method = ScoringMethod::Sac;
  } else {
    throw ConfigError("unknown method: " + args.method + " (expected ftc, slc or sac)");
  }
  Aggregation aggregation;
  if (args.aggregation == "avg" || args.aggregation == "average") {
    aggregation = Aggregation::Average;
  } else if (args.aggregation == "prod" || args.aggregation == "product") {
    aggregation = Aggregation::Product;
  } else {
    throw ConfigError("unknown aggregation: " + args.aggregation);
  }
  FoldingConfig folding;
  folding.token_exclusion = !args.no_token_exclusion;
  folding.case_folding = !args.no_case_folding;
  folding.order_folding = !args.no_order_folding;
  folding.synonym_folding = !args.no_synonym_folding;
  folding.equivalent_expressions = !args.no_equivalent_expressions;
  folding.include_all_roles = args.include_all_roles;
  folding.top_k = args.top_k;

  const std::string sql = trim_text(read_input(args.sql_path));
  std::vector<TokenRecord> tokens = load_logprobs(args.logprob_path);
  trim_token_edges(tokens);
  for (const TokenRecord& token : tokens) {
    std::string problem = validate_token_record(token);
    if (!problem.empty()) throw ConfigError("bad token record: " + problem);
  }
  std::vector<Lexeme> lexemes = lex_sql(sql);
  std::vector<Lexeme> aligned = align(tokens, lexemes);
  std::vector<Role> roles = classify_roles(aligned, extract(sql));
  MethodScore result = score(method, aggregation, aligned, roles, tokens, folding);
  std::printf("%.12g\n", result.value);
  return 0;
}

int run_evaluate(const std::string& config_path) {
  RunConfig config = load_run_config(config_path);
  RunResult result = run(config);
  std::printf("examples: %zu\nfailures: %zu\n", result.examples, result.failures);
  for (const MethodSelector& selector : config.methods) {
    const CalibrationReport& report = result.reports.at(selector.name());
    std::printf("%s: n=%zu auc=", selector.name().c_str(), report.n);
    if (report.auc) {
      std::printf("%.4f", *report.auc);
    } else {
      std::printf("-");
    }
    std::printf(" ece=%.4f\n", report.ece);
  }
  if (result.examples > 0 &&
      static_cast<double>(result.failures) / static_cast<double>(result.examples) >
          config.failure_threshold) {
    return 3;
  }
  return 0;
}

bool* folding_flag(FoldingConfig& folding, const std::string& feature) {
  if (feature == "token_exclusion") return &folding.token_exclusion;
  if (feature == "case_folding") return &folding.case_folding;
  if (feature == "order_folding") return &folding.order_folding;
  if (feature == "synonym_folding") return &folding.synonym_folding;
  if (feature == "equivalent_expressions") return &folding.equivalent_expressions;
  if (feature == "include_all_roles") return &folding.include_all_roles;
  return nullptr;
}

int run_ablate(const std::string& config_path, const std::string& feature) {
  RunConfig config = load_run_config(config_path);
  if (folding_flag(config.folding, feature) == nullptr) {
    throw ConfigError("unknown folding feature: " + feature);
  }
  auto run_with = [&](bool enabled) {
    RunConfig variant = config;
    *folding_flag(variant.folding, feature) = enabled;
    variant.output_dir = config.output_dir / (feature + (enabled ? "_on" : "_off"));
    return run(variant);
  };
  RunResult with = run_with(true);
  RunResult without = run_with(false);

  std::printf("method,aggregation,auc_on,auc_off,auc_delta,ece_on,ece_off,ece_delta\n");
  for (const MethodSelector& selector : config.methods) {
    const CalibrationReport& on = with.reports.at(selector.name());
    const CalibrationReport& off = without.reports.at(selector.name());
    std::string aggregation = selector.family == MethodSelector::Family::Logit
                                  ? (selector.aggregation == Aggregation::Product
                                         ? "product"
                                         : "average")
                                  : "-";
    std::printf("%s,%s,", selector.name().c_str(), aggregation.c_str());
    if (on.auc) std::printf("%.6f", *on.auc);
    std::printf(",");
    if (off.auc) std::printf("%.6f", *off.auc);
    std::printf(",");
    if (on.auc && off.auc) std::printf("%.6f", *on.auc - *off.auc);
    std::printf(",%.6f,%.6f,%.6f\n", on.ece, off.ece, on.ece - off.ece);
  }
  return 0;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

LengthBin parse_length_bin(const std::string& text) {
  if (text == "Medium") return LengthBin::Medium;
  if (text == "Long") return LengthBin::Long;
  return LengthBin::Short;
}

HeavinessBin parse_heaviness_bin(const std::string& text) {
  if (text == "Moderate") return HeavinessBin::Moderate;
  if (text == "High") return HeavinessBin::High;
  return HeavinessBin::Low;
}

int run_report(const std::string& input, int bins) {
  std::ifstream in(input, std::ios::binary);
  if (!in.is_open()) throw ConfigError("cannot open scores file: " + input);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("scores file is empty: " + input);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = parse_csv_line(line);
  const std::vector<std::string> kFixed = {"id",         "status", "label",
                                           "difficulty", "length", "heaviness"};
  if (header.size() <= kFixed.size()) {
    throw ConfigError("scores file has no method columns: " + input);
  }
  for (size_t i = 0; i < kFixed.size(); ++i) {
    if (header[i] != kFixed[i]) {
      throw ConfigError("scores file column " + std::to_string(i) + " is \"" +
                        header[i] + "\", expected \"" + kFixed[i] + "\"");
    }
  }
  std::vector<std::string> methods(header.begin() + kFixed.size(), header.end());
  std::vector<std::vector<LabeledScore>> per_method(methods.size());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = parse_csv_line(line);
    if (fields.size() != header.size()) {
      throw ConfigError("scores row has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(header.size()));
    }
    if (fields[1] != "ok" || fields[2].empty()) continue;
    Strata strata;
    strata.difficulty = fields[3].empty() ? "unknown" : fields[3];
    strata.length = parse_length_bin(fields[4]);
    strata.heaviness = parse_heaviness_bin(fields[5]);
    bool correct = fields[2] == "1";
    for (size_t m = 0; m < methods.size(); ++m) {
      const std::string& cell = fields[kFixed.size() + m];
      if (cell.empty()) continue;
      per_method[m].push_back({std::stod(cell), correct, strata});
    }
  }
  json output = json::object();
  for (size_t m = 0; m < methods.size(); ++m) {
    if (per_method[m].empty()) {
      output[methods[m]] = {{"n", 0}, {"auc", nullptr}, {"ece", nullptr}};
      continue;
    }
    CalibrationReport report = build_report(per_method[m], bins);
    json bin_list = json::array();
    for (const CalibrationBin& bin : report.bins) {
      bin_list.push_back({{"lower", bin.lower},
                          {"upper", bin.upper},
                          {"count", bin.count},
                          {"mean_confidence", bin.mean_confidence},
                          {"accuracy", bin.accuracy}});
    }
    json per_stratum = json::object();
    for (const auto& [key, metrics] : report.per_stratum) {
      per_stratum[key] = {{"n", metrics.n},
                          {"auc", metrics.auc ? json(*metrics.auc) : json()},
                          {"ece", metrics.ece}};
    }
    output[methods[m]] = {{"n", report.n},
                          {"auc", report.auc ? json(*report.auc) : json()},
                          {"ece", report.ece},
                          {"ece_bins", bins},
                          {"bins", std::move(bin_list)},
                          {"per_stratum", std::move(per_stratum)}};
  }
  std::printf("%s\n", output.dump(2).c_str());
  return 0;
}

int run_cache_verify(const std::string& cache_path) {
  ResponseCache cache = ResponseCache::open(cache_path);
  CacheVerification verification = cache.verify();
  std::printf("records: %zu\n", verification.records);
  for (const std::string& key : verification.corrupt_keys) {
    std::printf("corrupt: %s\n", key.c_str());
  }
  for (const std::string& warning : verification.logprob_warnings) {
    std::printf("warning: %s\n", warning.c_str());
  }
  if (!verification.ok()) return 1;
  std::printf("ok\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence estimation for LLM-generated SQL"};
  app.require_subcommand(1);

  ScoreArgs score_args;
  CLI::App* score_cmd =
      app.add_subcommand("score", "Score one query from a token-logprob file");
  score_cmd->add_option("--sql", score_args.sql_path, "SQL file, or - for stdin")
      ->required();
  score_cmd->add_option("--logprobs", score_args.logprob_path, "token logprob JSON file")
      ->required();
  score_cmd->add_option("--method", score_args.method, "ftc, slc or sac");
  score_cmd->add_option("--aggregation", score_args.aggregation, "avg or prod");
  score_cmd->add_flag("--no-token-exclusion", score_args.no_token_exclusion,
                      "keep excludable sub-units");
  score_cmd->add_flag("--no-case-folding", score_args.no_case_folding,
                      "disable case folding");
  score_cmd->add_flag("--no-order-folding", score_args.no_order_folding,
                      "disable clause-order folding");
  score_cmd->add_flag("--no-synonym-folding", score_args.no_synonym_folding,
                      "disable synonym folding");
  score_cmd->add_flag("--no-equivalent-expressions", score_args.no_equivalent_expressions,
                      "disable expression-symmetry folding");
  score_cmd->add_flag("--include-all-roles", score_args.include_all_roles,
                      "widen the critical-token filter to every sub-unit");
  score_cmd->add_option("--top-k", score_args.top_k, "candidate list depth");

  std::string evaluate_config;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Full evaluation run");
  evaluate_cmd->add_option("--config", evaluate_config, "run configuration file")
      ->required();

  std::string ablate_config;
  std::string ablate_feature;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "Paired runs with one folding feature toggled");
  ablate_cmd->add_option("--config", ablate_config, "run configuration file")->required();
  ablate_cmd->add_option("--feature", ablate_feature, "folding feature to toggle")
      ->required();

  std::string report_input;
  int report_bins = 10;
  CLI::App* report_cmd =
      app.add_subcommand("report", "Recompute metrics from a scores.csv");
  report_cmd->add_option("--input", report_input, "scores.csv path")->required();
  report_cmd->add_option("--bins", report_bins, "calibration bin count");

  std::string cache_path;
  CLI::App* cache_cmd = app.add_subcommand("cache", "Response cache utilities");
  CLI::App* cache_verify_cmd =
      cache_cmd->add_subcommand("verify", "Check cache integrity");
  cache_verify_cmd->add_option("--cache", cache_path, "cache JSONL file")->required();
  cache_cmd->require_subcommand(1);

  try {
    app.parse(argc, argv);
    if (*score_cmd) return run_score(score_args);
    if (*evaluate_cmd) return run_evaluate(evaluate_config);
    if (*ablate_cmd) return run_ablate(ablate_config, ablate_feature);
    if (*report_cmd) return run_report(report_input, report_bins);
    if (*cache_verify_cmd) return run_cache_verify(cache_path);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return 2;
  } catch (const DatasetError& e) {
    std::fprintf(stderr, "dataset error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
