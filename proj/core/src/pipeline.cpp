#include "sqlconf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "sqlconf/consistency.hpp"
#include "sqlconf/embedder.hpp"
#include "sqlconf/errors.hpp"
#include "sqlconf/lexer.hpp"
#include "sqlconf/logit_scoring.hpp"
#include "sqlconf/schema_link.hpp"

namespace sqlconf {

using nlohmann::json;

namespace {

struct DbEntry {
  Database db;
  std::string schema_text;
};

/// Shares one read-only handle (and its serialized schema) per database id.
/// Database serializes its own executions, so entries are safe to share
/// across workers.
class DbPool {
 public:
  explicit DbPool(std::filesystem::path root) : root_(std::move(root)) {}

  DbEntry& get(const std::string& db_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(db_id);
    if (it != entries_.end()) return *it->second;
    Database db = Database::open_read_only(resolve_db_path(root_, db_id));
    std::string schema = serialize_schema(db.describe());
    auto entry = std::make_unique<DbEntry>(DbEntry{std::move(db), std::move(schema)});
    return *entries_.emplace(db_id, std::move(entry)).first->second;
  }

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<DbEntry>> entries_;
};

struct RunContext {
  const RunConfig& config;
  Gateway& gateway;
  DbPool& dbs;
  Embedder& embedder;
  bool any_logit = false;
  bool need_samples = false;
};

void process_example(const RunContext& ctx, const EvalExample& example,
                     ExampleOutcome& outcome, std::vector<MethodError>& errors) {
  outcome.id = example.id;
  for (const MethodSelector& selector : ctx.config.methods) {
    outcome.scores[selector.name()] = std::nullopt;
  }
  const auto timeout = std::chrono::milliseconds(ctx.config.exec_timeout_ms);
  try {
    DbEntry& dbe = ctx.dbs.get(example.db_id);
    GenerationResponse primary =
        ctx.gateway.generate(build_primary_request(ctx.config, example, dbe.schema_text));
    SqlSpan span = extract_sql_span(primary.text);
    const std::string sql = primary.text.substr(span.begin, span.end - span.begin);
    outcome.primary_sql = sql;

    std::vector<TokenRecord> tokens = slice_tokens(primary.tokens, span.begin, span.end);
    for (const TokenRecord& token : tokens) {
      std::string problem = validate_token_record(token);
      if (!problem.empty()) {
        throw AlignmentMismatch("token stream rejected: " + problem);
      }
    }
    std::vector<Lexeme> lexemes = lex_sql(sql);
    SchemaLinks links = extract(sql);
    std::vector<Lexeme> aligned;
    std::vector<Role> roles;
    if (ctx.any_logit && !tokens.empty()) {
      aligned = align(tokens, lexemes);
      roles = classify_roles(aligned, links);
    }

    outcome.label = label(dbe.db, sql, example.gold_sql, timeout);
    ExecResult exec = dbe.db.execute(sql, timeout);
    outcome.strata = stratify(sql, example.difficulty);

    std::vector<std::string> cluster_texts;
    if (ctx.need_samples) {
      cluster_texts.push_back(sql);
      for (int i = 1; i <= ctx.config.n_samples; ++i) {
        GenerationResponse sample = ctx.gateway.generate(
            build_sample_request(ctx.config, example, dbe.schema_text, i));
        try {
          cluster_texts.push_back(extract_sql(sample.text));
        } catch (const NoSqlFound&) {
          // Still a sample: it simply agrees with nothing executable.
          cluster_texts.push_back(sample.text);
        }
      }
    }

    std::map<ClusterMethod, Clustering> clusterings;
    for (const MethodSelector& selector : ctx.config.methods) {
      const std::string name = selector.name();
      try {
        double value = 0.0;
        switch (selector.family) {
          case MethodSelector::Family::Logit: {
            if (tokens.empty()) {
              throw std::runtime_error("primary response carries no token logprobs");
            }
            MethodScore method_score =
                score(selector.scoring, selector.aggregation, aligned, roles, tokens,
                      ctx.config.folding, ctx.config.degenerate_is_error);
            method_score = ground(method_score, exec, ctx.config.grounding);
            value = method_score.value;
            break;
          }
          case MethodSelector::Family::Consistency: {
            auto it = clusterings.find(selector.cluster);
            if (it == clusterings.end()) {
              Clustering clustering =
                  selector.cluster == ClusterMethod::Execution
                      ? cluster_by_execution(cluster_texts, dbe.db, timeout)
                  : selector.cluster == ClusterMethod::Schema
                      ? cluster_by_schema(cluster_texts)
                      : cluster_by_embedding(cluster_texts, ctx.embedder,
                                             ctx.config.embed_threshold);
              it = clusterings.emplace(selector.cluster, std::move(clustering)).first;
            }
            value = consistency_score(it->second, 0);
            if (ctx.config.grounding && !exec.ok()) value = 0.0;
            break;
          }
          case MethodSelector::Family::Verbalized: {
            std::optional<std::string> sql_arg;
            std::optional<std::vector<Row>> rows_arg;
            if (selector.verbalized == VerbalizedMethod::AugCoT) {
              sql_arg = sql;
              rows_arg = exec.ok() ? exec.rows : std::vector<Row>{};
            } else if (selector.verbalized == VerbalizedMethod::SelfCheck) {
              sql_arg = sql;
            }
            GenerationResponse response = ctx.gateway.generate(build_verbalized_request(
                ctx.config, example, dbe.schema_text, selector.verbalized, sql_arg, rows_arg));
            std::optional<double> parsed =
                selector.verbalized == VerbalizedMethod::SelfCheck
                    ? parse_self_check(response.text)
                    : parse_confidence(response.text);
            if (!parsed) {
              throw std::runtime_error("response has no parseable confidence");
            }
            value = *parsed;
            if (ctx.config.grounding && !exec.ok()) value = 0.0;
            break;
          }
        }
        outcome.scores[name] = value;
      } catch (const std::exception& method_error) {
        errors.push_back({example.id, name, method_error.what()});
      }
    }
  } catch (const DatasetError&) {
    throw;  // gold query or database problems abort the run
  } catch (const CacheMiss& miss) {
    outcome.status = "cache-miss";
    outcome.error = miss.what();
  } catch (const NoSqlFound& no_sql) {
    outcome.status = "no-sql";
    outcome.error = no_sql.what();
  } catch (const AlignmentMismatch& mismatch) {
    outcome.status = "misaligned";
    outcome.error = mismatch.what();
  } catch (const std::exception& other) {
    outcome.status = "error";
    outcome.error = other.what();
  }
  if (outcome.status != "ok") {
    errors.push_back({outcome.id, "", outcome.error});
  }
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.12g", value);
  return buffer;
}

std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    quoted += c;
    if (c == '"') quoted += '"';
  }
  quoted += '"';
  return quoted;
}

std::string aggregation_name(const MethodSelector& selector) {
  if (selector.family != MethodSelector::Family::Logit) return "-";
  return selector.aggregation == Aggregation::Product ? "product" : "average";
}

void write_scores_csv(const RunConfig& config, const RunResult& result) {
  std::ofstream out(config.output_dir / "scores.csv", std::ios::binary);
  out << "id,status,label,difficulty,length,heaviness";
  for (const MethodSelector& selector : config.methods) out << ',' << selector.name();
  out << '\n';
  for (const ExampleOutcome& outcome : result.outcomes) {
    out << csv_field(outcome.id) << ',' << outcome.status << ',';
    if (outcome.label) out << (*outcome.label ? '1' : '0');
    out << ',';
    if (outcome.strata) {
      out << csv_field(outcome.strata->difficulty) << ','
          << to_string(outcome.strata->length) << ','
          << to_string(outcome.strata->heaviness);
    } else {
      out << ",,";
    }
    for (const MethodSelector& selector : config.methods) {
      out << ',';
      auto it = outcome.scores.find(selector.name());
      if (it != outcome.scores.end() && it->second) out << format_double(*it->second);
    }
    out << '\n';
  }
}

json report_to_json(const RunConfig& config, const MethodSelector& selector,
                    const CalibrationReport& report) {
  json bins = json::array();
  for (const CalibrationBin& bin : report.bins) {
    bins.push_back({{"lower", bin.lower},
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
  return json{{"method", selector.name()},
              {"aggregation", aggregation_name(selector)},
              {"seed", config.seed},
              {"n", report.n},
              {"auc", report.auc ? json(*report.auc) : json()},
              {"ece", report.ece},
              {"ece_bins", report.ece_bins},
              {"bins", std::move(bins)},
              {"per_stratum", std::move(per_stratum)}};
}

int stratum_rank(const std::string& axis, const std::string& value) {
  static const std::vector<std::string> kLength = {"Short", "Medium", "Long"};
  static const std::vector<std::string> kHeaviness = {"Low", "Moderate", "High"};
  const std::vector<std::string>* order = nullptr;
  if (axis == "length") order = &kLength;
  if (axis == "heaviness") order = &kHeaviness;
  if (order == nullptr) return 0;  // difficulty stays alphabetical
  auto it = std::find(order->begin(), order->end(), value);
  return it == order->end() ? static_cast<int>(order->size())
                            : static_cast<int>(it - order->begin());
}

void write_strata_csv(const RunConfig& config, const RunResult& result,
                      const std::string& axis) {
  std::ofstream out(config.output_dir / ("strata_" + axis + ".csv"), std::ios::binary);
  out << "method,aggregation,stratum,n,auc,ece\n";
  const std::string prefix = axis + "=";
  for (const MethodSelector& selector : config.methods) {
    auto report_it = result.reports.find(selector.name());
    if (report_it == result.reports.end()) continue;
    const CalibrationReport& report = report_it->second;
    std::vector<std::string> values;
    for (const auto& [key, metrics] : report.per_stratum) {
      if (key.rfind(prefix, 0) == 0) values.push_back(key.substr(prefix.size()));
    }
    std::stable_sort(values.begin(), values.end(),
                     [&](const std::string& a, const std::string& b) {
                       return stratum_rank(axis, a) < stratum_rank(axis, b);
                     });
    for (const std::string& value : values) {
      const StratumMetrics& metrics = report.per_stratum.at(prefix + value);
      out << selector.name() << ',' << aggregation_name(selector) << ','
          << csv_field(value) << ',' << metrics.n << ',';
      if (metrics.auc) out << format_double(*metrics.auc);
      out << ',' << format_double(metrics.ece) << '\n';
    }
  }
}

void write_errors_json(const RunConfig& config, const RunResult& result) {
  json errors = json::array();
  for (const MethodError& error : result.errors) {
    errors.push_back({{"id", error.example_id},
                      {"method", error.method},
                      {"error", error.error}});
  }
  std::ofstream out(config.output_dir / "errors.json", std::ios::binary);
  out << errors.dump(2) << '\n';
}

}  // namespace

std::string question_block(const RunConfig& config, const EvalExample& example) {
  std::string question = example.question;
  if (config.use_evidence && example.evidence && !example.evidence->empty()) {
    question += "\n" + *example.evidence;
  }
  return question;
}

GenerationRequest build_primary_request(const RunConfig& config, const EvalExample& example,
                                        const std::string& schema_text) {
  PromptBundle bundle = build_prompt(TemplateSet::builtin(), VerbalizedMethod::Vanilla,
                                     question_block(config, example), schema_text);
  GenerationRequest request;
  request.model_id = config.model;
  request.messages = {{"user", bundle.user_text}};
  request.temperature = 0.0;
  request.top_k_logprobs = config.folding.top_k;
  request.max_tokens = config.max_tokens;
  request.sample_index = 0;
  return request;
}

GenerationRequest build_sample_request(const RunConfig& config, const EvalExample& example,
                                       const std::string& schema_text, int sample_index) {
  PromptBundle bundle = build_prompt(TemplateSet::builtin(), VerbalizedMethod::Vanilla,
                                     question_block(config, example), schema_text);
  GenerationRequest request;
  request.model_id = config.model;
  request.messages = {{"user", bundle.user_text}};
  request.temperature = config.temperature;
  request.top_k_logprobs = 0;
  request.max_tokens = config.max_tokens;
  request.sample_index = sample_index;
  return request;
}

GenerationRequest build_verbalized_request(const RunConfig& config, const EvalExample& example,
                                           const std::string& schema_text, VerbalizedMethod method,
                                           const std::optional<std::string>& sql_query,
                                           const std::optional<std::vector<Row>>& execution_rows) {
  PromptBundle bundle = build_prompt(TemplateSet::builtin(), method,
                                     question_block(config, example), schema_text,
                                     sql_query, execution_rows);
  GenerationRequest request;
  request.model_id = config.model;
  request.messages = {{"user", bundle.user_text}};
  request.temperature = 0.0;
  request.top_k_logprobs = 0;
  request.max_tokens = config.max_tokens;
  request.sample_index = 0;
  return request;
}

std::map<std::string, CalibrationReport> build_reports(
    const RunConfig& config, const std::vector<ExampleOutcome>& outcomes) {
  std::map<std::string, CalibrationReport> reports;
  for (const MethodSelector& selector : config.methods) {
    const std::string name = selector.name();
    std::vector<LabeledScore> labeled;
    for (const ExampleOutcome& outcome : outcomes) {
      if (outcome.status != "ok" || !outcome.label || !outcome.strata) continue;
      auto it = outcome.scores.find(name);
      if (it == outcome.scores.end() || !it->second) continue;
      labeled.push_back({*it->second, *outcome.label, *outcome.strata});
    }
    CalibrationReport report;
    if (!labeled.empty()) report = build_report(labeled, config.ece_bins);
    report.ece_bins = config.ece_bins;
    reports[name] = std::move(report);
  }
  return reports;
}

void write_artifacts(const RunConfig& config, const RunResult& result) {
  std::filesystem::create_directories(config.output_dir);
  write_scores_csv(config, result);
  for (const MethodSelector& selector : config.methods) {
    auto it = result.reports.find(selector.name());
    if (it == result.reports.end()) continue;
    json report = report_to_json(config, selector, it->second);
    std::ofstream out(config.output_dir / ("report_" + selector.name() + ".json"),
                      std::ios::binary);
    out << report.dump(2) << '\n';
  }
  write_strata_csv(config, result, "difficulty");
  write_strata_csv(config, result, "length");
  write_strata_csv(config, result, "heaviness");
  write_errors_json(config, result);
}

RunResult run(const RunConfig& config) {
  validate_run_config(config);
  std::vector<EvalExample> examples = load_dataset(config.dataset, config.dataset_format);
  ResponseCache cache = ResponseCache::open(config.cache_path);
  std::shared_ptr<Provider> provider;
  if (config.mode == GatewayMode::Record) {
    if (config.provider_url.empty()) {
      throw ConfigError("record mode requires provider_url (or SQLCONF_PROVIDER_URL)");
    }
    HttpProvider::Options options;
    options.base_url = config.provider_url;
    options.auth_token = config.provider_token;
    provider = std::make_shared<HttpProvider>(std::move(options));
  }
  Gateway gateway(config.mode, std::move(cache), std::move(provider));
  DbPool dbs(config.db_root);
  std::unique_ptr<Embedder> embedder;
  if (!config.embed_url.empty()) {
    embedder = std::make_unique<HttpEmbedder>(config.embed_url, config.embed_model,
                                              config.embed_token);
  } else {
    embedder = std::make_unique<HashingEmbedder>();
  }

  RunContext ctx{config, gateway, dbs, *embedder};
  for (const MethodSelector& selector : config.methods) {
    if (selector.family == MethodSelector::Family::Logit) ctx.any_logit = true;
    if (selector.family == MethodSelector::Family::Consistency) ctx.need_samples = true;
  }

  RunResult result;
  result.examples = examples.size();
  result.outcomes.resize(examples.size());
  std::vector<std::vector<MethodError>> example_errors(examples.size());

  size_t worker_count = config.workers > 0
                            ? static_cast<size_t>(config.workers)
                            : std::max(1u, std::thread::hardware_concurrency());
  worker_count = std::min(worker_count, std::max<size_t>(1, examples.size()));

  std::atomic<size_t> next{0};
  std::mutex abort_mutex;
  std::exception_ptr abort;
  auto worker = [&] {
    for (;;) {
      size_t index = next.fetch_add(1);
      if (index >= examples.size()) return;
      {
        std::lock_guard<std::mutex> lock(abort_mutex);
        if (abort) return;
      }
      try {
        process_example(ctx, examples[index], result.outcomes[index],
                        example_errors[index]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(abort_mutex);
        if (!abort) abort = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(worker_count);
  for (size_t i = 0; i < worker_count; ++i) threads.emplace_back(worker);
  for (std::thread& thread : threads) thread.join();
  if (abort) std::rethrow_exception(abort);

  for (std::vector<MethodError>& errors : example_errors) {
    result.errors.insert(result.errors.end(), errors.begin(), errors.end());
  }
  for (const ExampleOutcome& outcome : result.outcomes) {
    if (outcome.status != "ok") ++result.failures;
  }
  result.reports = build_reports(config, result.outcomes);
  write_artifacts(config, result);
  return result;
}

}  // namespace sqlconf
