#include "sqlconf/embedder.hpp"

#include <cmath>
#include <cstdint>

#define CPPHTTPLIB_NO_EXCEPTIONS
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sqlconf/errors.hpp"

namespace sqlconf {
namespace {

// FNV-1a, stable across platforms.
uint64_t fnv1a(const char* data, size_t size) {
  uint64_t h = 1469598103934665603ull;
  for (size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

// Splits "http://host:port/base" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const size_t scheme = url.find("://");
  const size_t path = scheme == std::string::npos ? url.find('/')
                                                  : url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, ""};
  return {url.substr(0, path), url.substr(path)};
}

}  // namespace

std::vector<double> HashingEmbedder::embed(const std::string& text) {
  std::vector<double> vec(dimensions_, 0.0);
  if (dimensions_ == 0) return vec;
  const std::string padded = "\x02" + text + "\x03";
  for (size_t i = 0; i + 3 <= padded.size(); ++i) {
    const uint64_t h = fnv1a(padded.data() + i, 3);
    vec[h % dimensions_] += 1.0;
  }
  double norm = 0.0;
  for (double v : vec) norm += v * v;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& v : vec) v /= norm;
  }
  return vec;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, std::string auth_token)
    : base_url_(std::move(base_url)), model_(std::move(model)),
      auth_token_(std::move(auth_token)) {}

std::vector<double> HttpEmbedder::embed(const std::string& text) {
  const auto [origin, prefix] = split_url(base_url_);
  httplib::Client client(origin);
  client.set_read_timeout(60, 0);
  httplib::Headers headers;
  if (!auth_token_.empty()) headers.emplace("Authorization", "Bearer " + auth_token_);

  nlohmann::json body = {{"model", model_}, {"input", text}};
  const auto res = client.Post(prefix + "/embeddings", headers, body.dump(), "application/json");
  if (!res) throw EmbedderUnavailable("embedding endpoint unreachable: " + base_url_);
  if (res->status != 200) {
    throw EmbedderUnavailable("embedding endpoint returned HTTP " + std::to_string(res->status));
  }
  const nlohmann::json parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("data") || parsed["data"].empty() ||
      !parsed["data"][0].contains("embedding")) {
    throw EmbedderUnavailable("embedding response malformed");
  }
  std::vector<double> vec;
  for (const auto& v : parsed["data"][0]["embedding"]) {
    if (!v.is_number()) throw EmbedderUnavailable("embedding vector malformed");
    vec.push_back(v.get<double>());
  }
  if (vec.empty()) throw EmbedderUnavailable("embedding vector empty");
  return vec;
}

}  // namespace sqlconf
