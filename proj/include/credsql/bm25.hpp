#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace credsql {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0;
};

/// Okapi BM25 with the Lucene idf, ln(1 + (N - df + 0.5) / (df + 0.5)), which
/// is never negative. Documents may be appended; statistics always reflect
/// the current corpus.
class Bm25Index {
 public:
  explicit Bm25Index(Bm25Params params = {});

  void add(std::string doc_id, std::string_view text);
  std::size_t size() const noexcept { return docs_.size(); }

  /// Score of every document in insertion order.
  std::vector<double> score_all(const std::vector<std::string>& query_terms) const;

  /// Descending by score, ties by ascending doc_id, at most top_n entries.
  /// Zero-score documents are kept so short corpora return min(top_n, N).
  std::vector<ScoredDoc> rank(std::string_view query, std::size_t top_n) const;
  std::vector<std::size_t> rank_indices(const std::vector<std::string>& query_terms, std::size_t top_n) const;

 private:
  struct Doc {
    std::string id;
    int length = 0;
  };
  struct Posting {
    std::size_t doc;
    int tf;
  };

  double idf(const std::string& term) const;

  Bm25Params params_;
  std::vector<Doc> docs_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  long long total_length_ = 0;
};

std::vector<ScoredDoc> bm25_rank(std::string_view query,
                                 const std::vector<std::pair<std::string, std::string>>& corpus,
                                 std::size_t top_n, Bm25Params params = {});

}  // namespace credsql
