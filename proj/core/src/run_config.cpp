#include "sqlconf/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sqlconf/errors.hpp"

namespace sqlconf {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& value, const std::string& key) {
  std::string v = lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key \"" + key + "\": expected a boolean, got \"" + value + "\"");
}

long long parse_int(const std::string& value, const std::string& key) {
  size_t consumed = 0;
  long long result = 0;
  try {
    result = std::stoll(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": expected an integer, got \"" + value + "\"");
  }
  if (consumed != value.size()) {
    throw ConfigError("key \"" + key + "\": expected an integer, got \"" + value + "\"");
  }
  return result;
}

double parse_double(const std::string& value, const std::string& key) {
  size_t consumed = 0;
  double result = 0;
  try {
    result = std::stod(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": expected a number, got \"" + value + "\"");
  }
  if (consumed != value.size()) {
    throw ConfigError("key \"" + key + "\": expected a number, got \"" + value + "\"");
  }
  return result;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(trim(current));
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(trim(current));
  parts.erase(std::remove_if(parts.begin(), parts.end(),
                             [](const std::string& p) { return p.empty(); }),
              parts.end());
  return parts;
}

}  // namespace

std::string MethodSelector::name() const {
  switch (family) {
    case Family::Logit: {
      std::string method = scoring == ScoringMethod::Ftc   ? "ftc"
                           : scoring == ScoringMethod::Slc ? "slc"
                                                           : "sac";
      return method + (aggregation == Aggregation::Product ? "-product" : "-average");
    }
    case Family::Consistency:
      switch (cluster) {
        case ClusterMethod::Execution:
          return "consistency-execution";
        case ClusterMethod::Schema:
          return "consistency-schema";
        case ClusterMethod::Embedding:
          return "consistency-embedding";
      }
      break;
    case Family::Verbalized:
      switch (verbalized) {
        case VerbalizedMethod::Vanilla:
          return "verbalized-vanilla";
        case VerbalizedMethod::CoT:
          return "verbalized-cot";
        case VerbalizedMethod::AugCoT:
          return "verbalized-augcot";
        case VerbalizedMethod::SelfCheck:
          return "self-check";
      }
      break;
  }
  return "unknown";
}

MethodSelector MethodSelector::parse(const std::string& text) {
  const std::string name = lower(trim(text));
  MethodSelector selector;

  if (name == "self-check" || name == "selfcheck" ||
      name == "verbalized-self-check" || name == "verbalized-selfcheck") {
    selector.family = Family::Verbalized;
    selector.verbalized = VerbalizedMethod::SelfCheck;
    return selector;
  }

  size_t dash = name.find('-');
  const std::string head = dash == std::string::npos ? name : name.substr(0, dash);
  const std::string tail = dash == std::string::npos ? "" : name.substr(dash + 1);

  if (head == "ftc" || head == "slc" || head == "sac") {
    selector.family = Family::Logit;
    selector.scoring = head == "ftc"   ? ScoringMethod::Ftc
                       : head == "slc" ? ScoringMethod::Slc
                                       : ScoringMethod::Sac;
    if (tail == "product" || tail == "prod") {
      selector.aggregation = Aggregation::Product;
    } else if (tail == "average" || tail == "avg") {
      selector.aggregation = Aggregation::Average;
    } else {
      throw ConfigError("method \"" + text + "\": expected -product or -average");
    }
    return selector;
  }

  if (head == "consistency") {
    selector.family = Family::Consistency;
    if (tail == "execution" || tail == "exec") {
      selector.cluster = ClusterMethod::Execution;
    } else if (tail == "schema") {
      selector.cluster = ClusterMethod::Schema;
    } else if (tail == "embedding" || tail == "embed") {
      selector.cluster = ClusterMethod::Embedding;
    } else {
      throw ConfigError("method \"" + text +
                        "\": expected -execution, -schema, or -embedding");
    }
    return selector;
  }

  if (head == "verbalized") {
    selector.family = Family::Verbalized;
    if (tail == "vanilla") {
      selector.verbalized = VerbalizedMethod::Vanilla;
    } else if (tail == "cot") {
      selector.verbalized = VerbalizedMethod::CoT;
    } else if (tail == "augcot" || tail == "aug-cot") {
      selector.verbalized = VerbalizedMethod::AugCoT;
    } else {
      throw ConfigError("method \"" + text +
                        "\": expected -vanilla, -cot, or -augcot");
    }
    return selector;
  }

  throw ConfigError("unknown method selector: \"" + text + "\"");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));

    if (key == "dataset") {
      config.dataset = value;
    } else if (key == "dataset_format") {
      config.dataset_format = parse_dataset_format(value);
    } else if (key == "db_root") {
      config.db_root = value;
    } else if (key == "methods") {
      config.methods.clear();
      for (const std::string& part : split(value, ',')) {
        config.methods.push_back(MethodSelector::parse(part));
      }
    } else if (key == "token_exclusion") {
      config.folding.token_exclusion = parse_bool(value, key);
    } else if (key == "case_folding") {
      config.folding.case_folding = parse_bool(value, key);
    } else if (key == "order_folding") {
      config.folding.order_folding = parse_bool(value, key);
    } else if (key == "synonym_folding") {
      config.folding.synonym_folding = parse_bool(value, key);
    } else if (key == "equivalent_expressions") {
      config.folding.equivalent_expressions = parse_bool(value, key);
    } else if (key == "include_all_roles") {
      config.folding.include_all_roles = parse_bool(value, key);
    } else if (key == "top_k") {
      config.folding.top_k = static_cast<int>(parse_int(value, key));
    } else if (key == "synonyms") {
      // Classes separated by ';', members by '|': "!=|<>;true|1".
      for (const std::string& cls : split(value, ';')) {
        std::vector<std::string> members = split(cls, '|');
        if (members.size() < 2) {
          throw ConfigError("key \"synonyms\": class \"" + cls +
                            "\" needs at least two members");
        }
        config.folding.synonym_classes.emplace_back(members.begin(), members.end());
      }
    } else if (key == "n_samples") {
      config.n_samples = static_cast<int>(parse_int(value, key));
    } else if (key == "temperature") {
      config.temperature = parse_double(value, key);
    } else if (key == "grounding") {
      config.grounding = parse_bool(value, key);
    } else if (key == "mode") {
      std::string v = lower(value);
      if (v == "record") {
        config.mode = GatewayMode::Record;
      } else if (v == "replay") {
        config.mode = GatewayMode::Replay;
      } else {
        throw ConfigError("key \"mode\": expected record or replay");
      }
    } else if (key == "cache") {
      config.cache_path = value;
    } else if (key == "output_dir") {
      config.output_dir = value;
    } else if (key == "ece_bins") {
      config.ece_bins = static_cast<int>(parse_int(value, key));
    } else if (key == "seed") {
      config.seed = static_cast<uint64_t>(parse_int(value, key));
    } else if (key == "workers") {
      config.workers = static_cast<int>(parse_int(value, key));
    } else if (key == "model") {
      config.model = value;
    } else if (key == "provider_url") {
      config.provider_url = value;
    } else if (key == "provider_token") {
      config.provider_token = value;
    } else if (key == "embed_url") {
      config.embed_url = value;
    } else if (key == "embed_model") {
      config.embed_model = value;
    } else if (key == "embed_token") {
      config.embed_token = value;
    } else if (key == "embed_threshold") {
      config.embed_threshold = parse_double(value, key);
    } else if (key == "max_tokens") {
      config.max_tokens = static_cast<int>(parse_int(value, key));
    } else if (key == "exec_timeout_ms") {
      config.exec_timeout_ms = static_cast<int>(parse_int(value, key));
    } else if (key == "use_evidence") {
      config.use_evidence = parse_bool(value, key);
    } else if (key == "failure_threshold") {
      config.failure_threshold = parse_double(value, key);
    } else if (key == "degenerate_is_error") {
      config.degenerate_is_error = parse_bool(value, key);
    } else {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": unknown key \"" + key + "\"");
    }
  }
  return config;
}

void validate_run_config(const RunConfig& config) {
  if (config.dataset.empty()) throw ConfigError("config: dataset is required");
  if (config.db_root.empty()) throw ConfigError("config: db_root is required");
  if (config.output_dir.empty()) throw ConfigError("config: output_dir is required");
  if (config.cache_path.empty()) throw ConfigError("config: cache is required");
  if (config.methods.empty()) throw ConfigError("config: methods is required");
  if (config.ece_bins < 1) throw ConfigError("config: ece_bins must be >= 1");
  if (config.n_samples < 0) throw ConfigError("config: n_samples must be >= 0");
  if (config.folding.top_k < 1) throw ConfigError("config: top_k must be >= 1");
  if (config.workers < 0) throw ConfigError("config: workers must be >= 0");
  if (config.failure_threshold < 0 || config.failure_threshold > 1) {
    throw ConfigError("config: failure_threshold must be in [0, 1]");
  }
  if (config.mode == GatewayMode::Replay &&
      !std::filesystem::exists(config.cache_path)) {
    throw ConfigError("config: replay mode requires an existing cache file: " +
                      config.cache_path.string());
  }
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  RunConfig config = parse_run_config(buffer.str());

  // Only endpoint/credential settings may come from the environment.
  if (const char* url = std::getenv("SQLCONF_PROVIDER_URL")) config.provider_url = url;
  if (const char* token = std::getenv("SQLCONF_PROVIDER_TOKEN")) config.provider_token = token;
  if (const char* url = std::getenv("SQLCONF_EMBED_URL")) config.embed_url = url;
  if (const char* token = std::getenv("SQLCONF_EMBED_TOKEN")) config.embed_token = token;

  // Paths in the file are relative to the file's directory.
  const std::filesystem::path base = path.parent_path();
  auto anchor = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  anchor(config.dataset);
  anchor(config.db_root);
  anchor(config.cache_path);
  anchor(config.output_dir);

  validate_run_config(config);
  return config;
}

}  // namespace sqlconf
