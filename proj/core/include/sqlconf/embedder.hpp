#pragma once

#include <string>
#include <vector>

namespace sqlconf {

/// Maps text to a fixed-dimension vector. Implementations must be
/// deterministic: equal inputs yield equal vectors.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
};

/// Offline fallback: hashed character trigram counts. Deterministic, no
/// external service, reasonable at telling differently-shaped queries apart.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(size_t dimensions = 64) : dimensions_(dimensions) {}
  std::vector<double> embed(const std::string& text) override;

 private:
  size_t dimensions_;
};

/// Remote embedding endpoint (JSON over HTTP). Throws EmbedderUnavailable on
/// transport or shape problems.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string base_url, std::string model, std::string auth_token = {});
  std::vector<double> embed(const std::string& text) override;

 private:
  std::string base_url_;
  std::string model_;
  std::string auth_token_;
};

}  // namespace sqlconf
