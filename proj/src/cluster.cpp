#include "credsql/cluster.hpp"

#include <set>

#include "credsql/bm25.hpp"

namespace credsql {

int ClusterTable::size_of(const std::string& uuid) const {
  const auto it = cluster_of.find(uuid);
  if (it == cluster_of.end()) throw Error(ErrorCode::InvalidArgument, "unknown column uuid '" + uuid + "'");
  return sizes.at(it->second);
}

double cluster_weight(int size) {
  if (size < 1) throw Error(ErrorCode::ZeroSize, "cluster size must be >= 1, got " + std::to_string(size));
  return 1.0 / static_cast<double>(size);
}

ClusterTable cluster_columns(const std::vector<ClusterInput>& columns, const ClusterOptions& options) {
  if (!(options.s1 > 0.0 && options.s1 < 1.0)) {
    throw Error(ErrorCode::InvalidThreshold, "s1 must lie in (0, 1), got " + std::to_string(options.s1));
  }
  if (options.bm25_prefilter && options.top_n < 1) {
    throw Error(ErrorCode::InvalidArgument, "BM25 prefilter needs top_n >= 1");
  }

  ClusterTable table;
  table.threshold_s1 = options.s1;
  if (columns.empty()) return table;

  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c.uuid).second) throw Error(ErrorCode::DuplicateUuid, c.uuid);
  }
  const auto dim = columns.front().vector.size();
  for (const auto& c : columns) {
    if (c.vector.size() != dim) throw Error(ErrorCode::DimMismatch, "column '" + c.uuid + "' has a different dim");
  }

  // Visited vectors stored column-wise so one product gives every similarity.
  Eigen::MatrixXd visited(dim, static_cast<Eigen::Index>(columns.size()));
  std::vector<int> visited_cluster;
  visited_cluster.reserve(columns.size());
  Bm25Index lexical;
  std::vector<int> counts;

  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& col = columns[i];
    int cluster = -1;

    if (i > 0) {
      counts.assign(static_cast<std::size_t>(table.cluster_count), 0);
      bool any = false;
      auto consider = [&](std::size_t j, double sim) {
        if (sim > options.s1) {
          ++counts[static_cast<std::size_t>(visited_cluster[j])];
          any = true;
        }
      };
      if (options.bm25_prefilter) {
        const auto terms = word_tokens(col.text);
        for (auto j : lexical.rank_indices(terms, options.top_n)) {
          consider(j, visited.col(static_cast<Eigen::Index>(j)).dot(col.vector));
        }
      } else {
        for (std::size_t j = 0; j < i; ++j) consider(j, visited.col(static_cast<Eigen::Index>(j)).dot(col.vector));
      }
      if (any) {
        cluster = 0;
        for (int k = 1; k < table.cluster_count; ++k) {
          if (counts[static_cast<std::size_t>(k)] > counts[static_cast<std::size_t>(cluster)]) cluster = k;
        }
      }
    }

    if (cluster < 0) {
      cluster = table.cluster_count++;
      table.sizes[cluster] = 1;
    } else {
      ++table.sizes[cluster];
    }
    table.assignments.push_back({col.uuid, cluster, table.sizes[cluster]});
    table.cluster_of[col.uuid] = cluster;
    visited.col(static_cast<Eigen::Index>(i)) = col.vector;
    visited_cluster.push_back(cluster);
    if (options.bm25_prefilter) lexical.add(col.uuid, col.text);
  }
  return table;
}

}  // namespace credsql
