#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "credsql/error.hpp"

namespace credsql {

template <typename Scalar>
using Embedding = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Unit-norm embedding used throughout retrieval.
using Vector = Embedding<double>;

/// Inner product of two unit vectors. Symmetric bit-for-bit.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& u, const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimMismatch,
                "cosine of vectors with dims " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  return u.dot(v);
}

/// Scales `v` to unit L2 norm in place. Returns false for the zero vector.
template <typename Derived>
bool normalize_in_place(Eigen::MatrixBase<Derived>& v) {
  const auto norm = v.norm();
  if (!(norm > 0)) return false;
  v /= norm;
  return true;
}

/// Lowercased word tokens: splits on non-alphanumerics, snake_case and camelCase.
std::vector<std::string> word_tokens(std::string_view text);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual Vector embed(std::string_view text) const = 0;
  virtual std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const;
  virtual int dim() const = 0;
  /// Identifies the embedder; indexes built by different embedders don't mix.
  virtual std::string fingerprint() const = 0;
};

/// Hashes character trigrams of the normalized text into a fixed-dimension
/// signed feature vector, then L2-normalizes. Pure and thread-safe.
class TrigramEmbedder final : public EmbeddingProvider {
 public:
  static constexpr int kDefaultDim = 512;
  static constexpr std::uint64_t kDefaultSeed = 0x9e3779b97f4a7c15ULL;

  explicit TrigramEmbedder(int dim = kDefaultDim, std::uint64_t seed = kDefaultSeed);

  Vector embed(std::string_view text) const override;
  int dim() const override { return dim_; }
  std::string fingerprint() const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

class HttpTransport;

struct HttpEmbedderConfig {
  std::string base_url;  // e.g. https://api.openai.com
  std::string model;
  std::string api_key;
  int dim = 0;           // 0: learned from the first response
  int timeout_seconds = 60;
};

/// Client for an OpenAI-compatible /v1/embeddings endpoint.
class HttpEmbedder final : public EmbeddingProvider {
 public:
  HttpEmbedder(HttpEmbedderConfig config, std::shared_ptr<HttpTransport> transport);

  Vector embed(std::string_view text) const override;
  std::vector<Vector> embed_batch(const std::vector<std::string>& texts) const override;
  int dim() const override;
  std::string fingerprint() const override;

 private:
  HttpEmbedderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

/// Checks the non-empty-after-trim precondition shared by every provider.
void require_text(std::string_view text);

}  // namespace credsql
