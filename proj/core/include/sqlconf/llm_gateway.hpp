#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sqlconf/token_record.hpp"

namespace sqlconf {

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string text;
};

struct GenerationRequest {
  std::string model_id;
  std::vector<Message> messages;
  double temperature = 0.0;
  int top_k_logprobs = 0;
  int max_tokens = 512;
  /// Distinguishes otherwise identical sampling requests in the cache.
  int sample_index = 0;
};

enum class FinishReason { Stop, Length, Error };

struct GenerationResponse {
  std::string text;
  std::vector<TokenRecord> tokens;  // empty when logprobs were not requested
  FinishReason finish_reason = FinishReason::Stop;
};

/// Canonical JSON for a request: sorted keys, no whitespace. The cache key is
/// the lowercase-hex SHA-256 of this string.
std::string canonical_request_json(const GenerationRequest& request);
std::string request_key(const GenerationRequest& request);

/// Model backend. Implementations must be safe to call from several threads.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
};

/// Chat-completions endpoint speaking JSON over HTTP with per-token logprobs.
/// Transient failures (connection loss, 429, 5xx) retry up to 3 attempts with
/// exponential backoff starting at one second.
class HttpProvider : public Provider {
 public:
  struct Options {
    std::string base_url;        // e.g. "http://localhost:8000/v1"
    std::string auth_token;      // optional bearer token
    int max_in_flight = 4;       // per-provider concurrent request cap
    double backoff_seconds = 1;  // first retry delay; doubles per attempt
  };
  explicit HttpProvider(Options options);
  ~HttpProvider() override;
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct CacheVerification {
  size_t records = 0;
  std::vector<std::string> corrupt_keys;      // stored key != re-hash of request
  std::vector<std::string> logprob_warnings;  // candidate mass above 1 + 1e-6
  bool ok() const { return corrupt_keys.empty(); }
};

/// Append-only JSONL response cache. One record per line:
/// {"key": ..., "request": ..., "response": ...} with token probabilities
/// stored as natural logs on disk. Appends are serialized against each other;
/// callers that mix lookups with concurrent appends must supply their own
/// locking (Gateway does).
class ResponseCache {
 public:
  static ResponseCache open(const std::filesystem::path& path);

  std::optional<GenerationResponse> lookup(const std::string& key) const;
  void append(const std::string& key, const GenerationRequest& request,
              const GenerationResponse& response);
  CacheVerification verify() const;
  size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path path_;
  std::map<std::string, GenerationResponse> entries_;
  std::map<std::string, std::string> request_json_;  // canonical, for verify()
  std::shared_ptr<std::mutex> append_mutex_ = std::make_shared<std::mutex>();
};

enum class GatewayMode { Record, Replay };

/// Record/replay front door for generation. Record mode serves cache hits and
/// calls the provider only on misses, appending what it learns; replay mode
/// never touches the provider and throws CacheMiss for unknown requests.
class Gateway {
 public:
  Gateway(GatewayMode mode, ResponseCache cache, std::shared_ptr<Provider> provider);
  GenerationResponse generate(const GenerationRequest& request);
  GatewayMode mode() const { return mode_; }

 private:
  GatewayMode mode_;
  ResponseCache cache_;
  std::shared_ptr<Provider> provider_;
  std::mutex mutex_;
};

}  // namespace sqlconf
