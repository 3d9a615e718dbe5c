#include "credsql/retrieve.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace credsql {

using nlohmann::json;

SchemaIndex::SchemaIndex(std::vector<TableIndexEntry> tables, std::vector<ColumnIndexEntry> columns,
                         ClusterTable cluster_table, std::string provider_fingerprint)
    : tables_(std::move(tables)),
      columns_(std::move(columns)),
      cluster_table_(std::move(cluster_table)),
      provider_fingerprint_(std::move(provider_fingerprint)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    if (!table_pos_.emplace(tables_[i].table_name, i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate table '" + tables_[i].table_name + "' in index");
    }
  }
  columns_by_table_.resize(tables_.size());
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& c = columns_[i];
    const auto it = table_pos_.find(c.table);
    if (it == table_pos_.end()) {
      throw Error(ErrorCode::UnknownTable, "column '" + c.name + "' belongs to unindexed table '" + c.table + "'");
    }
    if (c.cluster_size < 1) throw Error(ErrorCode::ZeroSize, "column '" + c.name + "' has cluster size 0");
    columns_by_table_[it->second].push_back(i);
  }
}

const TableIndexEntry* SchemaIndex::find_table(std::string_view table_name) const {
  const auto it = table_pos_.find(table_name);
  return it == table_pos_.end() ? nullptr : &tables_[it->second];
}

const std::vector<std::size_t>& SchemaIndex::columns_of(std::string_view table_name) const {
  const auto it = table_pos_.find(table_name);
  if (it == table_pos_.end()) throw Error(ErrorCode::UnknownTable, std::string(table_name));
  return columns_by_table_[it->second];
}

std::string column_text(const ColumnMeta& column) { return column.name + ": " + column.description; }

SchemaIndex build_index(const UnionSchema& schema, const EmbeddingProvider& provider,
                        const IndexBuildOptions& options) {
  if (schema.table_count() == 0) throw Error(ErrorCode::InvalidArgument, "cannot index an empty schema");

  std::vector<std::string> table_texts;
  std::vector<std::string> col_texts;
  for (const auto& t : schema.tables()) {
    table_texts.push_back(t.description);
    for (const auto& c : t.columns) col_texts.push_back(column_text(c));
  }
  auto table_vecs = provider.embed_batch(table_texts);
  auto col_vecs = provider.embed_batch(col_texts);

  std::vector<ClusterInput> inputs;
  inputs.reserve(col_texts.size());
  std::set<std::string> used;
  {
    std::size_t ci = 0;
    for (const auto& t : schema.tables()) {
      for (const auto& c : t.columns) {
        std::string uuid = t.union_name + "." + c.name;
        for (int n = 2; !used.insert(uuid).second; ++n) uuid = t.union_name + "." + c.name + "#" + std::to_string(n);
        inputs.push_back({std::move(uuid), col_vecs[ci], col_texts[ci]});
        ++ci;
      }
    }
  }
  ClusterTable clusters = cluster_columns(inputs, options.clustering);

  std::vector<TableIndexEntry> tables;
  std::vector<ColumnIndexEntry> columns;
  std::size_t ci = 0;
  for (std::size_t ti = 0; ti < schema.tables().size(); ++ti) {
    const auto& t = schema.tables()[ti];
    tables.push_back({std::move(table_vecs[ti]), t.union_name, t.description});
    for (const auto& c : t.columns) {
      const int cluster = clusters.cluster_of.at(inputs[ci].uuid);
      columns.push_back({std::move(col_vecs[ci]), cluster, clusters.sizes.at(cluster), c.name, c.description,
                         t.union_name});
      ++ci;
    }
  }
  return SchemaIndex(std::move(tables), std::move(columns), std::move(clusters), provider.fingerprint());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  Vector v(static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), v.data());
  return v;
}

}  // namespace

json to_json(const SchemaIndex& index) {
  json tables = json::array();
  for (const auto& t : index.tables()) {
    tables.push_back({{"table_name", t.table_name}, {"table_description", t.table_description},
                      {"embedding", vec_json(t.embedding)}});
  }
  json columns = json::array();
  for (const auto& c : index.columns()) {
    columns.push_back({{"name", c.name}, {"description", c.description}, {"table", c.table},
                       {"cluster_id", c.cluster_id}, {"cluster_size", c.cluster_size},
                       {"embedding", vec_json(c.embedding)}});
  }
  const auto& ct = index.cluster_table();
  json assignments = json::array();
  for (const auto& a : ct.assignments) {
    assignments.push_back({{"uuid", a.column_uuid}, {"cluster_id", a.cluster_id},
                           {"size_at_assignment", a.cluster_size_at_assignment}});
  }
  return {{"provider_fingerprint", index.provider_fingerprint()},
          {"cluster_table", {{"threshold_s1", ct.threshold_s1}, {"cluster_count", ct.cluster_count},
                             {"assignments", std::move(assignments)}}},
          {"tables", std::move(tables)},
          {"columns", std::move(columns)}};
}

SchemaIndex index_from_json(const json& j) {
  try {
    std::vector<TableIndexEntry> tables;
    for (const auto& t : j.at("tables")) {
      tables.push_back({vec_from(t.at("embedding")), t.at("table_name").get<std::string>(),
                        t.at("table_description").get<std::string>()});
    }
    std::vector<ColumnIndexEntry> columns;
    for (const auto& c : j.at("columns")) {
      columns.push_back({vec_from(c.at("embedding")), c.at("cluster_id").get<int>(), c.at("cluster_size").get<int>(),
                         c.at("name").get<std::string>(), c.at("description").get<std::string>(),
                         c.at("table").get<std::string>()});
    }
    ClusterTable ct;
    const auto& cj = j.at("cluster_table");
    ct.threshold_s1 = cj.at("threshold_s1").get<double>();
    ct.cluster_count = cj.at("cluster_count").get<int>();
    for (const auto& a : cj.at("assignments")) {
      ClusterAssignment as{a.at("uuid").get<std::string>(), a.at("cluster_id").get<int>(),
                           a.at("size_at_assignment").get<int>()};
      ct.cluster_of[as.column_uuid] = as.cluster_id;
      ++ct.sizes[as.cluster_id];
      ct.assignments.push_back(std::move(as));
    }
    return SchemaIndex(std::move(tables), std::move(columns), std::move(ct),
                       j.at("provider_fingerprint").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed index file: ") + e.what());
  }
}

void save_index(const SchemaIndex& index, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  out << to_json(index).dump() << '\n';
}

SchemaIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
  return index_from_json(j);
}

// ---------------------------------------------------------------------------
// Retrieval

ScoredTable combine_table_score(std::string table_name, double table_score,
                                const std::vector<ColumnEvidence>& columns, double floor, bool weighted) {
  ScoredTable s;
  s.table_name = std::move(table_name);
  s.table_score = table_score;
  for (const auto& c : columns) {
    if (c.similarity < floor) continue;
    s.column_score_sum += c.similarity * (weighted ? cluster_weight(c.cluster_size) : 1.0);
  }
  s.total = s.column_score_sum + s.table_score;
  return s;
}

Vector embed_question(std::string_view question, const EmbeddingProvider& provider, const SchemaIndex& index) {
  if (provider.fingerprint() != index.provider_fingerprint()) {
    throw Error(ErrorCode::ProviderMismatch, "index built with '" + index.provider_fingerprint() +
                                                 "', querying with '" + provider.fingerprint() + "'");
  }
  try {
    return provider.embed(question);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::EmptyText) throw Error(ErrorCode::EmptyQuestion, "question is empty");
    throw;
  }
}

std::vector<std::string> retrieve_candidates(const Vector& question, const SchemaIndex& index, std::size_t m) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  const auto& tables = index.tables();
  std::vector<double> sims(tables.size());
  for (std::size_t i = 0; i < tables.size(); ++i) sims[i] = cosine(question, tables[i].embedding);
  std::vector<std::size_t> order(tables.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto n = std::min(m, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return tables[a].table_name < tables[b].table_name;
                    });
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(tables[order[i]].table_name);
  return out;
}

std::vector<std::string> retrieve_candidates(std::string_view question, const EmbeddingProvider& provider,
                                             const SchemaIndex& index, std::size_t m) {
  return retrieve_candidates(embed_question(question, provider, index), index, m);
}

ScoredTable score_table(const Vector& question, std::string_view table_name, const SchemaIndex& index, double floor,
                        bool weighted) {
  const auto* table = index.find_table(table_name);
  if (!table) throw Error(ErrorCode::UnknownTable, std::string(table_name));
  std::vector<ColumnEvidence> evidence;
  for (auto ci : index.columns_of(table_name)) {
    const auto& c = index.columns()[ci];
    evidence.push_back({cosine(question, c.embedding), c.cluster_size});
  }
  return combine_table_score(table->table_name, cosine(question, table->embedding), evidence, floor, weighted);
}

ScoredTable score_table(std::string_view question, const EmbeddingProvider& provider, std::string_view table_name,
                        const SchemaIndex& index, double floor, bool weighted) {
  return score_table(embed_question(question, provider, index), table_name, index, floor, weighted);
}

std::vector<ScoredTable> rank_tables(const Vector& question, const SchemaIndex& index,
                                     const RetrievalOptions& options) {
  if (options.k < 1 || options.k > options.m) throw Error(ErrorCode::InvalidArgument, "need 1 <= k <= m");
  std::vector<ScoredTable> scored;
  for (const auto& name : retrieve_candidates(question, index, options.m)) {
    scored.push_back(score_table(question, name, index, options.floor, options.weighted));
  }
  std::stable_sort(scored.begin(), scored.end(), [](const ScoredTable& a, const ScoredTable& b) {
    if (a.total != b.total) return a.total > b.total;
    return a.table_name < b.table_name;
  });
  if (scored.size() > options.k) scored.resize(options.k);
  return scored;
}

std::vector<ScoredTable> rank_tables(std::string_view question, const EmbeddingProvider& provider,
                                     const SchemaIndex& index, const RetrievalOptions& options) {
  return rank_tables(embed_question(question, provider, index), index, options);
}

double recall_at_k(const std::vector<std::string>& ranked, const GoldSet& gold, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (gold.tables.empty()) throw Error(ErrorCode::EmptyGold, "gold set for '" + gold.question_id + "' is empty");
  std::set<std::string> top(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size())));
  std::size_t hit = 0;
  for (const auto& g : gold.tables) hit += top.contains(g) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(gold.tables.size());
}

json to_json(const ScoredTable& s) {
  return {{"table_name", s.table_name}, {"table_score", s.table_score},
          {"column_score_sum", s.column_score_sum}, {"total", s.total}};
}

}  // namespace credsql
