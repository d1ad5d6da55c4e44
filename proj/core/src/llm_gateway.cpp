#include "sqlconf/llm_gateway.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sqlconf/errors.hpp"

namespace sqlconf {

using nlohmann::json;

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int digest_len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr ||
      EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &digest_len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex(digest_len * 2, '0');
  static const char kDigits[] = "0123456789abcdef";
  for (unsigned int i = 0; i < digest_len; ++i) {
    hex[2 * i] = kDigits[digest[i] >> 4];
    hex[2 * i + 1] = kDigits[digest[i] & 0xf];
  }
  return hex;
}

json request_to_json(const GenerationRequest& request) {
  json messages = json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", m.role}, {"text", m.text}});
  }
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  return json{{"max_tokens", request.max_tokens},
              {"messages", std::move(messages)},
              {"model_id", request.model_id},
              {"sample_index", request.sample_index},
              {"temperature", request.temperature},
              {"top_k_logprobs", request.top_k_logprobs}};
}

double logprob_to_linear(double logprob) {
  double p = std::exp(logprob);
  if (p > 1.0) p = 1.0;
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  return p;
}

json response_to_json(const GenerationResponse& response) {
  json tokens = json::array();
  for (const TokenRecord& t : response.tokens) {
    json candidates = json::array();
    for (const TokenCandidate& c : t.candidates) {
      candidates.push_back({{"text", c.text}, {"logprob", std::log(c.prob)}});
    }
    tokens.push_back({{"text", t.text},
                      {"logprob", std::log(t.prob)},
                      {"candidates", std::move(candidates)}});
  }
  const char* finish = response.finish_reason == FinishReason::Stop     ? "stop"
                       : response.finish_reason == FinishReason::Length ? "length"
                                                                        : "error";
  return json{{"text", response.text},
              {"tokens", std::move(tokens)},
              {"finish_reason", finish}};
}

GenerationResponse response_from_json(const json& j) {
  GenerationResponse response;
  response.text = j.at("text").get<std::string>();
  for (const json& t : j.at("tokens")) {
    TokenRecord record;
    record.text = t.at("text").get<std::string>();
    record.prob = logprob_to_linear(t.at("logprob").get<double>());
    for (const json& c : t.value("candidates", json::array())) {
      record.candidates.push_back(
          {c.at("text").get<std::string>(),
           logprob_to_linear(c.at("logprob").get<double>())});
    }
    response.tokens.push_back(std::move(record));
  }
  const std::string finish = j.value("finish_reason", "stop");
  response.finish_reason = finish == "length"  ? FinishReason::Length
                           : finish == "error" ? FinishReason::Error
                                               : FinishReason::Stop;
  return response;
}

}  // namespace

std::string canonical_request_json(const GenerationRequest& request) {
  return request_to_json(request).dump();
}

std::string request_key(const GenerationRequest& request) {
  return sha256_hex(canonical_request_json(request));
}

ResponseCache ResponseCache::open(const std::filesystem::path& path) {
  ResponseCache cache;
  cache.path_ = path;
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) return cache;  // absent file == empty cache
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("key") ||
        !record.contains("request") || !record.contains("response")) {
      char msg[128];
      std::snprintf(msg, sizeof(msg), "cache line %zu is not a valid record",
                    line_number);
      throw ConfigError(msg);
    }
    const std::string key = record.at("key").get<std::string>();
    cache.entries_[key] = response_from_json(record.at("response"));
    cache.request_json_[key] = record.at("request").dump();
  }
  return cache;
}

std::optional<GenerationResponse> ResponseCache::lookup(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::append(const std::string& key, const GenerationRequest& request,
                           const GenerationResponse& response) {
  std::lock_guard<std::mutex> lock(*append_mutex_);
  if (entries_.count(key) != 0) return;
  json record{{"key", key},
              {"request", request_to_json(request)},
              {"response", response_to_json(response)}};
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out.is_open()) {
    throw ConfigError("cannot append to cache file: " + path_.string());
  }
  out << record.dump() << "\n";
  entries_[key] = response;
  request_json_[key] = record.at("request").dump();
}

CacheVerification ResponseCache::verify() const {
  CacheVerification result;
  result.records = entries_.size();
  for (const auto& [key, request_json] : request_json_) {
    if (sha256_hex(request_json) != key) {
      result.corrupt_keys.push_back(key);
    }
  }
  for (const auto& [key, response] : entries_) {
    for (size_t i = 0; i < response.tokens.size(); ++i) {
      const TokenRecord& t = response.tokens[i];
      double mass = 0.0;
      for (const TokenCandidate& c : t.candidates) mass += c.prob;
      if (mass > 1.0 + 1e-6) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "%s token %zu: candidate mass %.6f exceeds 1", key.c_str(),
                      i, mass);
        result.logprob_warnings.push_back(msg);
      }
    }
  }
  return result;
}

struct HttpProvider::Impl {
  Options options;
  std::string host;
  std::string path_prefix;
  std::counting_semaphore<> in_flight;

  explicit Impl(Options opts)
      : options(std::move(opts)), in_flight(std::max(1, options.max_in_flight)) {
    auto pos = options.base_url.find("://");
    size_t host_start = pos == std::string::npos ? 0 : pos + 3;
    size_t slash = options.base_url.find('/', host_start);
    if (slash == std::string::npos) {
      host = options.base_url;
    } else {
      host = options.base_url.substr(0, slash);
      path_prefix = options.base_url.substr(slash);
    }
    while (!path_prefix.empty() && path_prefix.back() == '/') {
      path_prefix.pop_back();
    }
  }
};

HttpProvider::HttpProvider(Options options)
    : impl_(std::make_unique<Impl>(std::move(options))) {}

HttpProvider::~HttpProvider() = default;

namespace {

/// Converts one chat-completions choice into a GenerationResponse. Candidate
/// lists are normalized: the chosen token is inserted when the provider left
/// it out, and masses above one are rescaled so downstream validation holds.
GenerationResponse parse_completion(const json& body) {
  const json& choices = body.at("choices");
  if (!choices.is_array() || choices.empty()) {
    throw ProviderError("provider returned no choices", 200);
  }
  const json& choice = choices.at(0);
  GenerationResponse response;
  response.text = choice.at("message").at("content").get<std::string>();
  const std::string finish = choice.value("finish_reason", "stop");
  response.finish_reason = finish == "length" ? FinishReason::Length
                                              : FinishReason::Stop;
  if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) {
    return response;
  }
  for (const json& entry : choice.at("logprobs").at("content")) {
    TokenRecord record;
    record.text = entry.at("token").get<std::string>();
    record.prob = logprob_to_linear(entry.at("logprob").get<double>());
    for (const json& top : entry.value("top_logprobs", json::array())) {
      record.candidates.push_back(
          {top.at("token").get<std::string>(),
           logprob_to_linear(top.at("logprob").get<double>())});
    }
    if (!record.candidates.empty()) {
      bool has_chosen = false;
      double mass = 0.0;
      for (const TokenCandidate& c : record.candidates) {
        if (c.text == record.text) has_chosen = true;
        mass += c.prob;
      }
      if (!has_chosen) {
        record.candidates.insert(record.candidates.begin(),
                                 {record.text, record.prob});
        mass += record.prob;
      }
      if (mass > 1.0) {
        for (TokenCandidate& c : record.candidates) c.prob /= mass;
      }
    }
    response.tokens.push_back(std::move(record));
  }
  return response;
}

bool retryable_status(int status) {
  return status == 429 || (status >= 500 && status < 600);
}

}  // namespace

GenerationResponse HttpProvider::generate(const GenerationRequest& request) {
  json messages = json::array();
  for (const Message& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.text}});
  }
  json body{{"model", request.model_id},
            {"messages", std::move(messages)},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  if (request.top_k_logprobs > 0) {
    body["logprobs"] = true;
    body["top_logprobs"] = request.top_k_logprobs;
  }
  if (request.temperature > 0.0) {
    body["seed"] = request.sample_index;
  }
  const std::string payload = body.dump();

  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<>& sem;
    ~Release() { sem.release(); }
  } release{impl_->in_flight};

  const int kAttempts = 3;
  double delay = impl_->options.backoff_seconds;
  std::string last_error = "unknown provider failure";
  int last_status = 0;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      delay *= 2;
    }
    httplib::Client client(impl_->host);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers{{"Content-Type", "application/json"}};
    if (!impl_->options.auth_token.empty()) {
      headers.emplace("Authorization", "Bearer " + impl_->options.auth_token);
    }
    auto result = client.Post(impl_->path_prefix + "/chat/completions", headers,
                              payload, "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      last_status = 0;
      continue;
    }
    last_status = result->status;
    if (retryable_status(result->status)) {
      last_error = "provider returned status " + std::to_string(result->status);
      if (result->has_header("Retry-After")) {
        double hint = std::atof(result->get_header_value("Retry-After").c_str());
        if (hint > 0) delay = hint;
      }
      continue;
    }
    if (result->status != 200) {
      throw ProviderError("provider returned status " +
                              std::to_string(result->status) + ": " + result->body,
                          result->status);
    }
    json parsed = json::parse(result->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw ProviderError("provider returned malformed JSON", result->status);
    }
    return parse_completion(parsed);
  }
  throw ProviderError("provider unavailable after " + std::to_string(kAttempts) +
                          " attempts: " + last_error,
                      last_status);
}

Gateway::Gateway(GatewayMode mode, ResponseCache cache,
                 std::shared_ptr<Provider> provider)
    : mode_(mode), cache_(std::move(cache)), provider_(std::move(provider)) {}

GenerationResponse Gateway::generate(const GenerationRequest& request) {
  const std::string key = request_key(request);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto hit = cache_.lookup(key)) return *hit;
  }
  if (mode_ == GatewayMode::Replay) {
    throw CacheMiss(key);
  }
  if (provider_ == nullptr) {
    throw ProviderError("record mode requires a provider", 0);
  }
  GenerationResponse response = provider_->generate(request);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    cache_.append(key, request, response);
  }
  return response;
}

}  // namespace sqlconf
