#include "credsql/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "credsql/detail/strings.hpp"
#include "credsql/embedding.hpp"
#include "credsql/error.hpp"

namespace credsql {

Bm25Index::Bm25Index(Bm25Params params) : params_(params) {
  if (!(params_.k1 > 0) || params_.b < 0 || params_.b > 1) {
    throw Error(ErrorCode::InvalidArgument, "BM25 requires k1 > 0 and 0 <= b <= 1");
  }
}

void Bm25Index::add(std::string doc_id, std::string_view text) {
  Doc d;
  d.id = std::move(doc_id);
  std::unordered_map<std::string, int> tf;
  for (auto& tok : word_tokens(text)) {
    ++tf[tok];
    ++d.length;
  }
  for (const auto& [term, count] : tf) postings_[term].push_back({docs_.size(), count});
  total_length_ += d.length;
  docs_.push_back(std::move(d));
}

double Bm25Index::idf(const std::string& term) const {
  const auto it = postings_.find(term);
  const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
  const double n = static_cast<double>(docs_.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> Bm25Index::score_all(const std::vector<std::string>& query_terms) const {
  std::vector<double> scores(docs_.size(), 0.0);
  if (docs_.empty()) return scores;
  const double avgdl = std::max(1e-12, static_cast<double>(total_length_) / static_cast<double>(docs_.size()));
  for (const auto& term : query_terms) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = params_.k1 * (1.0 - params_.b + params_.b * docs_[p.doc].length / avgdl);
      scores[p.doc] += w * tf * (params_.k1 + 1.0) / (tf + norm);
    }
  }
  return scores;
}

std::vector<std::size_t> Bm25Index::rank_indices(const std::vector<std::string>& query_terms,
                                                 std::size_t top_n) const {
  const auto scores = score_all(query_terms);
  std::vector<std::size_t> order(docs_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto n = std::min(top_n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return docs_[a].id < docs_[b].id;
                    });
  order.resize(n);
  return order;
}

std::vector<ScoredDoc> Bm25Index::rank(std::string_view query, std::size_t top_n) const {
  if (top_n < 1) throw Error(ErrorCode::InvalidArgument, "top_n must be >= 1");
  const auto terms = word_tokens(query);
  if (terms.empty()) throw Error(ErrorCode::EmptyQuery, "query has no terms");
  const auto scores = score_all(terms);
  std::vector<ScoredDoc> out;
  for (auto i : rank_indices(terms, top_n)) out.push_back({docs_[i].id, scores[i]});
  return out;
}

std::vector<ScoredDoc> bm25_rank(std::string_view query,
                                 const std::vector<std::pair<std::string, std::string>>& corpus,
                                 std::size_t top_n, Bm25Params params) {
  if (corpus.empty()) throw Error(ErrorCode::InvalidArgument, "BM25 corpus is empty");
  Bm25Index index(params);
  for (const auto& [id, text] : corpus) index.add(id, text);
  return index.rank(query, top_n);
}

}  // namespace credsql
