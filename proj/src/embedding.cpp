#include "credsql/embedding.hpp"

#include <cctype>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "credsql/detail/strings.hpp"
#include "credsql/http.hpp"

namespace credsql {

namespace {

bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

}  // namespace

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(detail::to_lower(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!detail::is_alnum(c)) {
      flush();
      continue;
    }
    if (!cur.empty()) {
      const char prev = cur.back();
      const bool lower_to_upper = is_lower(prev) && is_upper(c);
      const bool acronym_end =
          is_upper(prev) && is_upper(c) && i + 1 < text.size() && is_lower(text[i + 1]);
      const bool digit_edge = detail::is_digit(prev) != detail::is_digit(c);
      if (lower_to_upper || acronym_end || digit_edge) flush();
    }
    cur += c;
  }
  flush();
  return out;
}

void require_text(std::string_view text) {
  if (detail::trim(text).empty()) throw Error(ErrorCode::EmptyText, "cannot embed empty text");
}

std::vector<Vector> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

// ---------------------------------------------------------------------------

TrigramEmbedder::TrigramEmbedder(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be positive");
}

Vector TrigramEmbedder::embed(std::string_view text) const {
  require_text(text);
  const auto words = word_tokens(text);
  Vector v = Vector::Zero(dim_);
  auto add_feature = [&](std::string_view feature) {
    const std::uint64_t h = fnv1a(feature, seed_);
    const auto slot = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
    v[slot] += (h >> 63) ? -1.0 : 1.0;
  };
  if (!words.empty()) {
    const std::string padded = " " + detail::join(words, " ") + " ";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) add_feature(std::string_view(padded).substr(i, 3));
  }
  if (!normalize_in_place(v)) {
    // No alphanumerics (or perfectly cancelling features): fall back to one
    // feature for the raw trimmed text so the output is still unit-norm.
    v.setZero();
    const std::uint64_t h = fnv1a(detail::trim(text), seed_);
    v[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_))] = 1.0;
  }
  return v;
}

std::string TrigramEmbedder::fingerprint() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "offline-trigram-%d-%016llx", dim_, static_cast<unsigned long long>(seed_));
  return buf;
}

// ---------------------------------------------------------------------------

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "HttpEmbedder needs a transport");
}

Vector HttpEmbedder::embed(std::string_view text) const {
  return embed_batch({std::string(text)}).front();
}

std::vector<Vector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  for (const auto& t : texts) require_text(t);
  nlohmann::json request = {{"model", config_.model}, {"input", texts}};
  HttpHeaders headers = {{"Content-Type", "application/json"}};
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
  std::string base = config_.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const auto response = transport_->post(base + "/v1/embeddings", headers, request.dump(), config_.timeout_seconds);
  if (response.status != 200) {
    throw Error(ErrorCode::ProviderUnavailable,
                "embeddings endpoint returned HTTP " + std::to_string(response.status) + ": " + response.body);
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(response.body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("unparseable embeddings response: ") + e.what());
  }
  if (!body.contains("data") || !body["data"].is_array() || body["data"].size() != texts.size()) {
    throw Error(ErrorCode::ProviderUnavailable, "embeddings response lacks one 'data' item per input");
  }
  std::vector<Vector> out(texts.size());
  for (const auto& item : body["data"]) {
    const auto index = item.value("index", std::size_t{0});
    const auto& values = item.at("embedding");
    if (index >= out.size()) throw Error(ErrorCode::ProviderUnavailable, "embedding index out of range");
    Vector v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i].get<double>();
    if (config_.dim > 0 && v.size() != config_.dim) {
      throw Error(ErrorCode::DimMismatch, "embedding has dim " + std::to_string(v.size()) + ", expected " +
                                              std::to_string(config_.dim));
    }
    if (!normalize_in_place(v)) throw Error(ErrorCode::ProviderUnavailable, "provider returned a zero vector");
    out[index] = std::move(v);
  }
  return out;
}

int HttpEmbedder::dim() const { return config_.dim; }

std::string HttpEmbedder::fingerprint() const {
  return "http:" + config_.model + "@" + config_.base_url + "/" + std::to_string(config_.dim);
}

}  // namespace credsql
