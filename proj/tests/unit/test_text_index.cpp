#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "credsql/bm25.hpp"
#include "credsql/embedding.hpp"
#include "credsql/error.hpp"
#include "support.hpp"

using namespace credsql;
namespace t = credsql::testing;

TEST(Trigram, Deterministic) {
  TrigramEmbedder a, b;
  const auto u = a.embed("number of police officers");
  const auto v = b.embed("number of police officers");
  ASSERT_EQ(u.size(), 512);
  for (Eigen::Index i = 0; i < u.size(); ++i) ASSERT_EQ(u[i], v[i]);
}

TEST(Trigram, UnitNorm) {
  TrigramEmbedder e;
  for (const char* s : {"a", "city population", "Which cities do more than one employee under age 30 come from?",
                        "x y z 1 2 3", "ÅÄÖ unicode"}) {
    EXPECT_NEAR(e.embed(s).norm(), 1.0, 1e-6) << s;
  }
}

TEST(Trigram, RelatedPhrasesAreCloser) {
  TrigramEmbedder e;
  const auto a = e.embed("city population");
  EXPECT_GT(cosine(a, e.embed("population of city")), cosine(a, e.embed("flight number")));
}

TEST(Trigram, EmptyTextRejected) {
  TrigramEmbedder e;
  EXPECT_THROW(e.embed("   "), Error);
}

TEST(Trigram, SeedAndDimChangeFingerprint) {
  EXPECT_NE(TrigramEmbedder(512).fingerprint(), TrigramEmbedder(256).fingerprint());
  EXPECT_NE(TrigramEmbedder(512, 1).fingerprint(), TrigramEmbedder(512, 2).fingerprint());
}

TEST(Cosine, HandValues) {
  Vector x(2), y(2), u(2), v(2);
  x << 1, 0;
  y << 0, 1;
  u << 0.6, 0.8;
  v << 1, 0;
  EXPECT_EQ(cosine(x, y), 0.0);
  EXPECT_NEAR(cosine(u, v), 0.6, 1e-12);
}

TEST(Cosine, SymmetricBitForBit) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    Vector a(17), b(17);
    for (int d = 0; d < 17; ++d) {
      a[d] = g(rng);
      b[d] = g(rng);
    }
    a.normalize();
    b.normalize();
    ASSERT_EQ(cosine(a, b), cosine(b, a));
  }
}

TEST(Cosine, DimMismatch) {
  Vector a(2), b(3);
  a.setZero();
  b.setZero();
  EXPECT_THROW(cosine(a, b), Error);
}

TEST(WordTokens, SplitsCases) {
  EXPECT_EQ(word_tokens("PetType pet_age  Zip-code"),
            (std::vector<std::string>{"pet", "type", "pet", "age", "zip", "code"}));
}

// ---------------------------------------------------------------------------
// BM25

namespace {

// Textbook Okapi BM25, written out from the formula over whitespace tokens.
std::vector<double> reference_bm25(const std::vector<std::string>& docs, const std::string& query, double k1,
                                   double b) {
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    std::istringstream in(d);
    std::vector<std::string> words;
    for (std::string w; in >> w;) words.push_back(w);
    total += static_cast<double>(words.size());
    toks.push_back(words);
  }
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;
  std::istringstream qin(query);
  std::vector<double> scores(docs.size(), 0.0);
  for (std::string q; qin >> q;) {
    double df = 0;
    for (const auto& words : toks) df += std::count(words.begin(), words.end(), q) > 0 ? 1 : 0;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const double f = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), q));
      const double dl = static_cast<double>(toks[i].size());
      scores[i] += idf * f * (k1 + 1) / (f + k1 * (1 - b + b * dl / avgdl));
    }
  }
  return scores;
}

}  // namespace

TEST(Bm25, ToyCorpusMatchesReference) {
  const std::vector<std::string> docs = {"city name population", "city city district", "flight number pilot",
                                         "population density of the state capital city"};
  Bm25Index idx;
  for (std::size_t i = 0; i < docs.size(); ++i) idx.add("d" + std::to_string(i), docs[i]);
  for (const std::string q : {"city", "city population", "pilot number", "state", "nothing here"}) {
    const auto expected = reference_bm25(docs, q, 1.2, 0.75);
    std::vector<std::string> terms;
    std::istringstream in(q);
    for (std::string w; in >> w;) terms.push_back(w);
    const auto got = idx.score_all(terms);
    for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_NEAR(got[i], expected[i], 1e-9) << q << " doc " << i;
  }
}

TEST(Bm25, SingleMatchingDocRanksFirst) {
  const auto r = bm25_rank("pilot", {{"a", "city name"}, {"b", "flight pilot"}, {"c", "population"}}, 3);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].doc_id, "b");
  EXPECT_GT(r[0].score, 0.0);
}

TEST(Bm25, EmptyQuery) {
  EXPECT_THROW(bm25_rank("  ", {{"a", "x"}}, 1), Error);
  try {
    bm25_rank("", {{"a", "x"}}, 1);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyQuery);
  }
}

TEST(Bm25, TiesByDocId) {
  const auto r = bm25_rank("x", {{"b", "x"}, {"a", "x"}, {"c", "y"}}, 3);
  EXPECT_EQ(r[0].doc_id, "a");
  EXPECT_EQ(r[1].doc_id, "b");
}

// Adding one more occurrence of the query term to a document never lowers
// its score. This holds for single-term queries at any b; with several
// terms the longer document dilutes the other terms unless b = 0.
TEST(Bm25, DuplicatingQueryTermNeverLowersScore) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> vocab = {"city", "name", "age", "pilot", "state", "river", "code"};
  auto random_doc = [&] {
    std::string d;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) d += vocab[rng() % vocab.size()] + " ";
    return d;
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> docs;
    const int n = 2 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) docs.push_back(random_doc());
    const auto target = rng() % docs.size();
    const bool multi = trial % 2 == 1;
    const std::string term = vocab[rng() % vocab.size()];
    const std::vector<std::string> query = multi ? std::vector<std::string>{term, vocab[rng() % vocab.size()]}
                                                 : std::vector<std::string>{term};
    const Bm25Params params{1.2, multi ? 0.0 : 0.75};

    auto score_of = [&](const std::vector<std::string>& corpus) {
      Bm25Index idx(params);
      for (std::size_t i = 0; i < corpus.size(); ++i) idx.add(std::to_string(i), corpus[i]);
      return idx.score_all(query)[target];
    };
    const double before = score_of(docs);
    docs[target] += " " + term;
    EXPECT_GE(score_of(docs) + 1e-12, before);
  }
}

// ---------------------------------------------------------------------------
// HTTP embedder

TEST(HttpEmbedder, ParsesAndNormalizes) {
  auto transport = std::make_shared<t::CannedTransport>(std::vector<HttpResponse>{
      {200, R"({"data":[{"index":1,"embedding":[0,2]},{"index":0,"embedding":[3,4]}]})"}});
  HttpEmbedder e({"https://example.test/", "embed-small", "key", 2, 5}, transport);
  const auto vs = e.embed_batch({"first", "second"});
  EXPECT_NEAR(vs[0][0], 0.6, 1e-12);
  EXPECT_NEAR(vs[1][1], 1.0, 1e-12);
  EXPECT_EQ(transport->urls[0], "https://example.test/v1/embeddings");
  const auto body = nlohmann::json::parse(transport->bodies[0]);
  EXPECT_EQ(body["model"], "embed-small");
  EXPECT_EQ(body["input"].size(), 2u);
}

TEST(HttpEmbedder, ServerErrorIsUnavailable) {
  auto transport = std::make_shared<t::CannedTransport>(std::vector<HttpResponse>{{503, "busy"}});
  HttpEmbedder e({"https://example.test", "m", "", 0, 5}, transport);
  try {
    e.embed("x");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ProviderUnavailable);
  }
}

TEST(HttpEmbedder, WrongDimension) {
  auto transport = std::make_shared<t::CannedTransport>(
      std::vector<HttpResponse>{{200, R"({"data":[{"index":0,"embedding":[1,0,0]}]})"}});
  HttpEmbedder e({"https://example.test", "m", "", 2, 5}, transport);
  try {
    e.embed("x");
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::DimMismatch);
  }
}
