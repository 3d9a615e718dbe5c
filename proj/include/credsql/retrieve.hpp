#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "credsql/cluster.hpp"
#include "credsql/embedding.hpp"
#include "credsql/schema.hpp"

namespace credsql {

struct TableIndexEntry {
  Vector embedding;
  std::string table_name;  // union name
  std::string table_description;
};

struct ColumnIndexEntry {
  Vector embedding;
  int cluster_id = 0;
  int cluster_size = 1;
  std::string name;
  std::string description;
  std::string table;  // union name
};

/// Dual index over table descriptions and clustered columns. Immutable after
/// construction; safe to share across threads.
class SchemaIndex {
 public:
  SchemaIndex(std::vector<TableIndexEntry> tables, std::vector<ColumnIndexEntry> columns,
              ClusterTable cluster_table, std::string provider_fingerprint);

  const std::vector<TableIndexEntry>& tables() const noexcept { return tables_; }
  const std::vector<ColumnIndexEntry>& columns() const noexcept { return columns_; }
  const ClusterTable& cluster_table() const noexcept { return cluster_table_; }
  const std::string& provider_fingerprint() const noexcept { return provider_fingerprint_; }

  const TableIndexEntry* find_table(std::string_view table_name) const;
  /// Indexes into columns() for one table, in schema order.
  const std::vector<std::size_t>& columns_of(std::string_view table_name) const;

 private:
  std::vector<TableIndexEntry> tables_;
  std::vector<ColumnIndexEntry> columns_;
  ClusterTable cluster_table_;
  std::string provider_fingerprint_;
  std::map<std::string, std::size_t, std::less<>> table_pos_;
  std::vector<std::vector<std::size_t>> columns_by_table_;
};

struct IndexBuildOptions {
  ClusterOptions clustering;
};

/// Text a column is embedded and clustered by: "name: description".
std::string column_text(const ColumnMeta& column);

SchemaIndex build_index(const UnionSchema& schema, const EmbeddingProvider& provider,
                        const IndexBuildOptions& options = {});

nlohmann::json to_json(const SchemaIndex& index);
SchemaIndex index_from_json(const nlohmann::json& j);
void save_index(const SchemaIndex& index, const std::filesystem::path& path);
SchemaIndex load_index(const std::filesystem::path& path);

struct ScoredTable {
  std::string table_name;
  double table_score = 0;
  double column_score_sum = 0;  // already weighted
  double total = 0;
};

struct RetrievalOptions {
  std::size_t m = 50;    // stage-1 candidates
  std::size_t k = 10;    // returned after re-ranking
  double floor = 0.3;    // minimum column cosine that contributes; 0 sums every column
  bool weighted = true;  // false: every column weight is 1
};

/// One column's contribution to a table score.
struct ColumnEvidence {
  double similarity = 0;
  int cluster_size = 1;
};

/// Score(T) = sum_i Score(C_i) * W_i + Score_table(T) over columns at or above
/// the floor, with W_i = 1 / |G_k|_i (or 1 when unweighted).
ScoredTable combine_table_score(std::string table_name, double table_score,
                                const std::vector<ColumnEvidence>& columns, double floor, bool weighted = true);

/// Embeds a question, checking the provider matches the index.
Vector embed_question(std::string_view question, const EmbeddingProvider& provider, const SchemaIndex& index);

/// Stage 1: top-m tables by description cosine, ties by ascending name.
std::vector<std::string> retrieve_candidates(const Vector& question, const SchemaIndex& index, std::size_t m);
std::vector<std::string> retrieve_candidates(std::string_view question, const EmbeddingProvider& provider,
                                             const SchemaIndex& index, std::size_t m);

ScoredTable score_table(const Vector& question, std::string_view table_name, const SchemaIndex& index,
                        double floor = 0.3, bool weighted = true);
ScoredTable score_table(std::string_view question, const EmbeddingProvider& provider, std::string_view table_name,
                        const SchemaIndex& index, double floor = 0.3, bool weighted = true);

/// Stage 1 then stage 2 re-rank by total, descending, ties by ascending name.
std::vector<ScoredTable> rank_tables(const Vector& question, const SchemaIndex& index,
                                     const RetrievalOptions& options);
std::vector<ScoredTable> rank_tables(std::string_view question, const EmbeddingProvider& provider,
                                     const SchemaIndex& index, const RetrievalOptions& options);

/// |gold ∩ top-k| / |gold|.
double recall_at_k(const std::vector<std::string>& ranked, const GoldSet& gold, std::size_t k);

nlohmann::json to_json(const ScoredTable& scored);

}  // namespace credsql
