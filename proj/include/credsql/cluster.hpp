#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "credsql/embedding.hpp"

namespace credsql {

struct ClusterAssignment {
  std::string column_uuid;
  int cluster_id = 0;
  int cluster_size_at_assignment = 1;

  bool operator==(const ClusterAssignment&) const = default;
};

/// Partition of the schema columns into semantic clusters. `sizes` holds the
/// final |G_k| after every column was placed.
struct ClusterTable {
  std::vector<ClusterAssignment> assignments;  // input order
  std::map<std::string, int> cluster_of;       // uuid -> cluster id
  std::map<int, int> sizes;                    // cluster id -> final size
  double threshold_s1 = 0.5;
  int cluster_count = 0;

  int size_of(const std::string& uuid) const;

  bool operator==(const ClusterTable&) const = default;
};

struct ClusterInput {
  std::string uuid;
  Vector vector;
  std::string text;  // name + description; only read by the lexical prefilter
};

struct ClusterOptions {
  double s1 = 0.5;
  /// Restrict each column's candidates to the top_n visited columns by BM25
  /// over `text` before the similarity test. Disabled, every visited column
  /// is a candidate.
  bool bm25_prefilter = true;
  std::size_t top_n = 50;
};

/// Online threshold clustering over `columns` in input order: each column
/// joins the most frequent cluster among previously visited columns whose
/// cosine exceeds s1 (lowest id on ties), or opens a new cluster.
ClusterTable cluster_columns(const std::vector<ClusterInput>& columns, const ClusterOptions& options);

/// argmin_k ||v - mu_k||^2, ties to the smallest index.
template <typename Derived>
std::size_t assign_nearest_centroid(const Eigen::MatrixBase<Derived>& v, const std::vector<Vector>& centroids) {
  if (centroids.empty()) throw Error(ErrorCode::EmptyCentroids, "no centroids");
  std::size_t best = 0;
  double best_dist = 0;
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    if (centroids[k].size() != v.size()) {
      throw Error(ErrorCode::DimMismatch, "centroid " + std::to_string(k) + " has dim " +
                                              std::to_string(centroids[k].size()));
    }
    const double d = (v - centroids[k]).squaredNorm();
    if (k == 0 || d < best_dist) {
      best = k;
      best_dist = d;
    }
  }
  return best;
}

/// W = 1 / |G_k|.
double cluster_weight(int size);

}  // namespace credsql
