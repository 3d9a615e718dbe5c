#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "credsql/error.hpp"
#include "credsql/eval.hpp"
#include "credsql/retrieve.hpp"
#include "support.hpp"

using namespace credsql;
namespace t = credsql::testing;

namespace {

std::vector<std::string> names(const std::vector<ScoredTable>& r) {
  std::vector<std::string> out;
  for (const auto& s : r) out.push_back(s.table_name);
  return out;
}

UnionSchema distractor_union() {
  return build_union_schema(load_tables_manifest(t::data_dir() / "distractor" / "tables.json"));
}

const char* kMicroQuestion = "Which cities do more than one employee under age 30 come from?";

}  // namespace

// ---------------------------------------------------------------------------
// score arithmetic

TEST(TableScore, NoColumnAboveFloor) {
  const auto s = combine_table_score("t", 0.42, {{0.1, 1}, {0.29, 3}}, 0.3);
  EXPECT_EQ(s.total, 0.42);
  EXPECT_EQ(s.column_score_sum, 0.0);
}

TEST(TableScore, ConstructedT1T2) {
  const auto t1 = combine_table_score("T1", 0.5, {{0.8, 4}}, 0.3);
  const auto t2 = combine_table_score("T2", 0.55, {{0.8, 1}}, 0.3);
  EXPECT_NEAR(t1.total, 0.70, 1e-9);
  EXPECT_NEAR(t2.total, 1.35, 1e-9);
}

TEST(TableScore, IndexedT1T2) {
  const auto index = t::two_table_index();
  const auto q = t::two_table_question();
  EXPECT_NEAR(score_table(q, "db.T1", index).total, 0.70, 1e-9);
  EXPECT_NEAR(score_table(q, "db.T2", index).total, 1.35, 1e-9);
  const auto top1 = rank_tables(q, index, {2, 1, 0.3, true});
  EXPECT_EQ(names(top1), (std::vector<std::string>{"db.T2"}));
}

TEST(TableScore, FloorLinearity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> sim(-1, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ColumnEvidence> cols;
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) cols.push_back({sim(rng), 1 + static_cast<int>(rng() % 9)});
    const double ts = sim(rng);
    const auto base = combine_table_score("t", ts, cols, 0.3);

    auto below = cols;
    below.push_back({0.3 - 1e-6 - std::abs(sim(rng)) * 0.5, 2});
    EXPECT_EQ(combine_table_score("t", ts, below, 0.3).total, base.total);

    auto above = cols;
    above.push_back({0.3 + std::abs(sim(rng)) * 0.7, 1 + static_cast<int>(rng() % 9)});
    EXPECT_GT(combine_table_score("t", ts, above, 0.3).total, base.total);
  }
}

TEST(TableScore, FloorZeroSumsEveryColumnAboveZero) {
  const auto s = combine_table_score("t", 0.1, {{0.2, 2}, {0.05, 1}}, 0.0, true);
  EXPECT_NEAR(s.total, 0.1 + 0.1 + 0.05, 1e-12);
}

// ---------------------------------------------------------------------------
// stage 1 and 2 against brute force

namespace {

// Random index with hand-made vectors; every column in a singleton cluster
// when `uniform`.
SchemaIndex random_index(std::mt19937_64& rng, std::size_t n_tables, bool uniform) {
  std::normal_distribution<double> g;
  auto rv = [&] {
    Vector v(8);
    for (int i = 0; i < 8; ++i) v[i] = g(rng);
    return Vector(v.normalized());
  };
  std::vector<TableIndexEntry> tables;
  std::vector<ColumnIndexEntry> cols;
  ClusterTable ct;
  for (std::size_t i = 0; i < n_tables; ++i) {
    const auto name = "db.t" + std::to_string(i);
    tables.push_back({rv(), name, name});
    const auto nc = 1 + rng() % 4;
    for (std::size_t c = 0; c < nc; ++c) {
      const int size = uniform ? 1 : 1 + static_cast<int>(rng() % 5);
      const int id = ct.cluster_count++;
      cols.push_back({rv(), id, size, "c" + std::to_string(c), "", name});
      ct.sizes[id] = size;
    }
  }
  return SchemaIndex(std::move(tables), std::move(cols), std::move(ct), "stub");
}

}  // namespace

TEST(Stage1, MatchesBruteForceCosineSort) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto index = random_index(rng, 5, false);
    Vector q = index.tables()[rng() % 5].embedding + index.tables()[rng() % 5].embedding;
    if (!normalize_in_place(q)) continue;
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& tb : index.tables()) oracle.emplace_back(-q.dot(tb.embedding), tb.table_name);
    std::sort(oracle.begin(), oracle.end());
    const auto got = retrieve_candidates(q, index, 3);
    ASSERT_EQ(got.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(got[i], oracle[i].second);
  }
}

TEST(Stage1, LargeMReturnsEverything) {
  std::mt19937_64 rng(13);
  const auto index = random_index(rng, 7, false);
  EXPECT_EQ(retrieve_candidates(index.tables()[0].embedding, index, 50).size(), 7u);
}

TEST(Stage1, DescriptionTextRanksItsTableFirst) {
  const auto schema = t::fixture_union();
  TrigramEmbedder e;
  const auto index = build_index(schema, e);
  for (const auto& tb : schema.tables()) {
    EXPECT_EQ(retrieve_candidates(tb.description, e, index, 3).front(), tb.union_name) << tb.description;
  }
}

TEST(Stage2, KEqualsMIsPureReranking) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto index = random_index(rng, 12, false);
    const Vector q = index.columns()[rng() % index.columns().size()].embedding;
    auto s1 = retrieve_candidates(q, index, 6);
    auto s2 = names(rank_tables(q, index, {6, 6, 0.3, true}));
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    EXPECT_EQ(s1, s2);
  }
}

TEST(Stage2, UniformClustersWeightedEqualsUnweighted) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const auto index = random_index(rng, 10, true);
    const Vector q = index.columns()[rng() % index.columns().size()].embedding;
    const auto w = rank_tables(q, index, {10, 10, 0.3, true});
    const auto u = rank_tables(q, index, {10, 10, 0.3, false});
    EXPECT_EQ(names(w), names(u));

    // oracle: table score + plain sum of column cosines over the floor
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& tb : index.tables()) {
      double total = q.dot(tb.embedding);
      for (auto i : index.columns_of(tb.table_name)) {
        const double s = q.dot(index.columns()[i].embedding);
        if (s >= 0.3) total += s;
      }
      oracle.emplace_back(-total, tb.table_name);
    }
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_EQ(w[i].table_name, oracle[i].second);
  }
}

TEST(Stage2, RejectsBadKAndM) {
  const auto index = t::two_table_index();
  EXPECT_THROW(rank_tables(t::two_table_question(), index, {1, 2, 0.3, true}), Error);
  EXPECT_THROW(rank_tables(t::two_table_question(), index, {2, 0, 0.3, true}), Error);
}

TEST(Stage2, ProviderMismatch) {
  const auto index = t::two_table_index();
  TrigramEmbedder e;
  try {
    rank_tables("anything", e, index, {});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::ProviderMismatch);
  }
}

// ---------------------------------------------------------------------------
// index build

TEST(IndexBuild, OneTableThreeColumns) {
  DatabaseSchema db{"geo", {{"geo", "city", "", "cities", {{"name", "name", "text", ""}, {"state", "state", "text", ""},
                                                          {"population", "population", "number", ""}}}}, {}};
  const auto index = build_index(build_union_schema({db}), TrigramEmbedder());
  EXPECT_EQ(index.tables().size(), 1u);
  EXPECT_EQ(index.columns().size(), 3u);
  int total = 0;
  for (const auto& [id, size] : index.cluster_table().sizes) total += size;
  EXPECT_EQ(total, 3);
}

TEST(IndexBuild, DeterministicAndSerializable) {
  const auto schema = t::fixture_union();
  TrigramEmbedder e;
  const auto a = build_index(schema, e);
  const auto b = build_index(schema, e);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());

  const auto path = std::filesystem::temp_directory_path() / "credsql_index_test.json";
  save_index(a, path);
  const auto loaded = load_index(path);
  std::filesystem::remove(path);
  EXPECT_EQ(to_json(loaded).dump(), to_json(a).dump());
  EXPECT_EQ(names(rank_tables("pets of students", e, loaded, {9, 5, 0.3, true})),
            names(rank_tables("pets of students", e, a, {9, 5, 0.3, true})));
}

// ---------------------------------------------------------------------------
// recall

TEST(Recall, Basics) {
  EXPECT_EQ(recall_at_k({"A", "B", "C"}, {"q", {"A", "B"}}, 3), 1.0);
  EXPECT_EQ(recall_at_k({"A", "C", "D"}, {"q", {"A", "B"}}, 3), 0.5);
  EXPECT_THROW(recall_at_k({"A"}, {"q", {}}, 1), Error);
  EXPECT_THROW(recall_at_k({"A"}, {"q", {"A"}}, 0), Error);
}

TEST(Recall, MatchesBruteForceAndIsMonotone) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng() % 12;
    std::vector<std::string> ranked;
    for (std::size_t i = 0; i < n; ++i) ranked.push_back("t" + std::to_string(i));
    std::shuffle(ranked.begin(), ranked.end(), rng);
    GoldSet gold{"q", {}};
    const auto g = 1 + rng() % 4;
    for (std::size_t i = 0; i < g; ++i) gold.tables.insert("t" + std::to_string(rng() % (n + 3)));
    double prev = 0;
    for (std::size_t k = 1; k <= n + 2; ++k) {
      std::size_t hit = 0;
      for (const auto& name : gold.tables) {
        for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hit += ranked[i] == name ? 1 : 0;
      }
      const double want = static_cast<double>(hit) / static_cast<double>(gold.tables.size());
      const double got = recall_at_k(ranked, gold, k);
      ASSERT_EQ(got, want);
      ASSERT_GE(got, prev);
      prev = got;
    }
  }
}

// ---------------------------------------------------------------------------
// distractor union

TEST(Distractor, ShapeOfTheUnion) {
  const auto schema = distractor_union();
  EXPECT_GE(schema.table_count(), 40u);
  const auto index = build_index(schema, TrigramEmbedder());
  // "city" style columns sit in clusters larger than the employee city column
  int big = 0;
  for (const auto& c : index.columns()) {
    if (c.name.find("ity") != std::string::npos && c.cluster_size > 3) ++big;
  }
  EXPECT_GT(big, 5);
}

TEST(Distractor, RareColumnLiftsEmployeeTable) {
  const auto schema = distractor_union();
  TrigramEmbedder e;
  const auto index = build_index(schema, e);
  const auto s1 = retrieve_candidates(kMicroQuestion, e, index, 50);
  const auto pos = std::find(s1.begin(), s1.end(), "employee_hire_evaluation.employee") - s1.begin();
  EXPECT_GT(pos, 0);
  const auto s2 = rank_tables(kMicroQuestion, e, index, {50, 10, 0.3, true});
  EXPECT_EQ(s2.front().table_name, "employee_hire_evaluation.employee");
}

TEST(Distractor, WeightedRecallAtLeastUnweighted) {
  const auto schema = distractor_union();
  TrigramEmbedder e;
  const auto index = build_index(schema, e);
  const auto qs = load_questions(t::data_dir() / "distractor" / "questions.jsonl");
  const auto w = recall_report(qs, schema, index, e, {3}, {50, 10, 0.3, true});
  const auto u = recall_report(qs, schema, index, e, {3}, {50, 10, 0.3, false});
  EXPECT_TRUE(w.failures.empty());
  EXPECT_GE(w.recall_at.at(3), u.recall_at.at(3));
}
