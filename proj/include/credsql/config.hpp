#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "credsql/cluster.hpp"
#include "credsql/llm.hpp"
#include "credsql/retrieve.hpp"

namespace credsql {

struct PathsConfig {
  std::filesystem::path manifest;   // tables.json-style schema manifest(s)
  std::filesystem::path index;      // built index (JSON)
  std::filesystem::path databases;  // directory of <db>/<db>.sqlite files
  std::filesystem::path questions;  // JSON lines
  std::filesystem::path few_shots;  // JSON array
};

struct RetrievalConfig {
  double s1 = 0.5;
  std::size_t top_n = 50;
  bool bm25_prefilter = true;
  std::size_t m = 50;
  std::size_t k = 10;
  double floor = 0.3;
  bool weighted = true;

  ClusterOptions cluster_options() const { return {s1, bm25_prefilter, top_n}; }
  RetrievalOptions retrieval_options() const { return {m, k, floor, weighted}; }
};

struct EmbeddingConfig {
  std::string provider = "trigram";  // trigram | http
  int dim = 512;
  std::string base_url;
  std::string model;
  std::string api_key;
  int timeout_seconds = 60;
};

struct CliConfig {
  PathsConfig paths;
  RetrievalConfig retrieval;
  LlmConfig llm;
  EmbeddingConfig embedding;
  int parallelism = 1;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Process environment.
std::optional<std::string> process_env(const std::string& name);

/// TOML sections [paths], [retrieval], [llm], [embedding] plus top-level
/// parallelism. Unknown keys and ill-typed values throw ConfigError. Relative
/// paths resolve against `base_dir`. CRED_<SECTION>_<KEY> (or CRED_PARALLELISM)
/// environment variables override file values.
CliConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                       const EnvLookup& env = process_env);
CliConfig load_config(const std::filesystem::path& path, const EnvLookup& env = process_env);
/// Defaults plus environment overrides, for runs without a config file.
CliConfig default_config(const EnvLookup& env = process_env);

/// ConfigError naming `what` unless `path` is set and exists.
void require_path(const std::filesystem::path& path, std::string_view what);

}  // namespace credsql
