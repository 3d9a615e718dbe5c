#include <chrono>
#include <regex>

#include <gtest/gtest.h>

#include "credsql/compiler.hpp"
#include "credsql/edl/edl.hpp"
#include "credsql/eval.hpp"
#include "credsql/sqlite.hpp"
#include "support.hpp"

using namespace credsql;
using namespace credsql::edl;
namespace t = credsql::testing;

namespace {

const char* kExample2 =
    "#1.Scan Table: Retrieve all rows from the [Student] table.\n"
    "#2.Subquery: Retrieve all rows from the [Has_Pet] table aliased as T1.\n"
    "#3.Join the [Pets] table aliased as T2 on the condition that T1.PetID equals T2.PetID.\n"
    "#4. Reserve rows of #3 where the [PetType] in table T2 is 'cat'.\n"
    "#5. Select the [StuID] column from the [T1] table from the result of #4.\n"
    "#6. Reserve rows of #1 where [StuID] is not in the result of #5.\n"
    "#7. Select the [major] and [age] columns from the [Student] table from the result of #6.\n";

const char* kExample2Sql =
    "SELECT major, age FROM Student WHERE StuID NOT IN (SELECT T1.StuID FROM Has_Pet AS T1 JOIN Pets AS T2 ON "
    "T1.PetID = T2.PetID WHERE PetType = 'cat')";

// Collapses whitespace and drops "Tn." qualifiers.
std::string normalized(std::string sql) {
  sql = std::regex_replace(sql, std::regex(R"(\bT\d+\.)"), "");
  sql = std::regex_replace(sql, std::regex(R"(\s+)"), " ");
  return sql;
}

SubSchema pets() { return sub_schema_of_db(t::fixture_union(), "pets_1"); }

}  // namespace

TEST(Compile, Example2) {
  const auto q = compile(parse_edl(kExample2), pets());
  EXPECT_EQ(normalized(q.text), normalized(kExample2Sql));
  EXPECT_EQ(q.dialect, "sqlite");
  EXPECT_EQ(q.source_plan_root, 7);
  EXPECT_TRUE(execution_accuracy(q.text, kExample2Sql, t::fixture_db("pets_1")));
}

TEST(Compile, MinimalLowering) {
  const auto q = compile(parse_edl("#1. Scan Table: Retrieve all rows from the [Student] table.\n"
                                   "#2. Select the [name] column from the result of #1.\n"),
                         {});
  EXPECT_EQ(q.text, "SELECT name FROM Student");
}

TEST(Compile, GroupHavingSortLimitOverJoin) {
  const auto plan = parse_edl(
      "#1. Scan Table: Retrieve all rows from the [products] table aliased as T1.\n"
      "#2. Join the [orders] table aliased as T2 on the condition that T1.product_id equals T2.product_id.\n"
      "#3. Group #2 by the [category] column.\n"
      "#4. Apply Having Clause: Reserve the grouped rows of #3 where count(*) is greater than 1.\n"
      "#5. Order #4 by the [sum(quantity)] column in descending order.\n"
      "#6. Limit #5 to the top 2 record(s).\n"
      "#7. Select the [category] and [sum(quantity)] columns from the result of #6.\n");
  const auto store = sub_schema_of_db(t::fixture_union(), "store_1");
  const auto q = compile(plan, store);
  const char* reference =
      "SELECT category, sum(q) FROM (SELECT products.category AS category, orders.quantity AS q "
      "FROM orders, products WHERE orders.product_id = products.product_id) "
      "GROUP BY category HAVING count(*) >= 2 ORDER BY 2 DESC LIMIT 2";
  const auto db = t::fixture_db("store_1");
  const auto got = execute_sql(db, q.text);
  const auto want = execute_sql(db, reference);
  ASSERT_EQ(want.rows.size(), 2u);
  EXPECT_TRUE(results_match(got, want, true)) << q.text;
}

TEST(Compile, DanglingRefGivesDiagnosticsOnly) {
  EdlPlan plan;
  plan.steps.push_back(make_step(1, ScanTable{"Student", std::nullopt}));
  plan.steps.push_back(make_step(2, SelectColumn{4, {Expr::column("Age")}, std::nullopt, false}));
  plan.root = 2;
  const auto out = compile_or_explain(plan, pets());
  EXPECT_FALSE(out.ok());
  EXPECT_TRUE(has_errors(out.diagnostics));
  EXPECT_THROW(compile(plan, pets()), UnsupportedShapeError);
}

TEST(Compile, ParseErrorsPassThrough) {
  const auto out = compile_or_explain(std::string_view("#1. Frobnicate."), pets());
  EXPECT_FALSE(out.ok());
  ASSERT_FALSE(out.diagnostics.empty());
  EXPECT_EQ(out.diagnostics[0].code, "UnknownOperator");
}

TEST(Compile, RankingUsesWindowFunction) {
  const auto q = compile(parse_edl("#1. Scan Table: Retrieve all rows from the [Pets] table.\n"
                                   "#2. Compute the rank of [PetID] ordered by [weight] in descending order using the "
                                   "RANK( ) window function.\n"
                                   "#3. Select the [PetID] and [PetID_rank] columns from the result of #2.\n"),
                         pets());
  EXPECT_NE(q.text.find("RANK() OVER (ORDER BY weight DESC)"), std::string::npos) << q.text;
}

TEST(Compile, QuotesLiteralsAndKeywordIdentifiers) {
  const auto q = compile(parse_edl("#1. Scan Table: Retrieve all rows from the [Student] table.\n"
                                   "#2. Reserve rows of #1 where [LName] equals 'O''Brien'.\n"
                                   "#3. Select the [LName] column from the result of #2.\n"),
                         pets());
  EXPECT_NE(q.text.find("'O''Brien'"), std::string::npos) << q.text;

  const auto k = compile(parse_edl("#1. Scan Table: Retrieve all rows from the [order] table.\n"
                                   "#2. Select the [group] column from the result of #1.\n"),
                         {});
  EXPECT_EQ(k.text, "SELECT \"group\" FROM \"order\"");
}

TEST(Compile, HavingWithoutGroupByIsUnsupported) {
  const auto plan = parse_edl(
      "#1. Scan Table: Retrieve all rows from the [Pets] table.\n"
      "#2. Apply Having Clause: Reserve the grouped rows of #1 where count(*) is greater than 1.\n"
      "#3. Select the [PetType] column from the result of #2.\n");
  try {
    compile(plan, {});
    FAIL();
  } catch (const UnsupportedShapeError& e) {
    EXPECT_EQ(e.step(), 2);
  }
}

// ---------------------------------------------------------------------------
// gold suite

TEST(GoldSuite, CoversEveryOperator) {
  const auto suite = t::load_suite();
  EXPECT_GE(suite.size(), 30u);
  std::set<std::size_t> kinds;
  for (const auto& c : suite) {
    for (const auto& s : parse_edl(c.edl).steps) kinds.insert(s.op.index());
  }
  EXPECT_EQ(kinds.size(), kOperatorCount);
}

TEST(GoldSuite, ExecutionEquivalentAndFast) {
  const auto start = std::chrono::steady_clock::now();
  const auto schema = t::fixture_union();
  for (const auto& c : t::load_suite()) {
    const auto out = compile_or_explain(c.edl, sub_schema_of_db(schema, c.db_id));
    ASSERT_TRUE(out.ok()) << c.id << "\n" << format_diagnostics(out.diagnostics);
    const auto v = execution_verdict(out.query->text, c.gold_sql, t::fixture_db(c.db_id));
    EXPECT_TRUE(v.match) << c.id << ": " << v.reason << "\n" << out.query->text;
  }
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(GoldSuite, CompiledSqlPrepares) {
  const auto schema = t::fixture_union();
  for (const auto& c : t::load_suite()) {
    auto db = Database::open(t::fixture_db(c.db_id));
    const auto q = compile(parse_edl(c.edl), sub_schema_of_db(schema, c.db_id));
    EXPECT_EQ(db.prepare_error(q.text), std::nullopt) << c.id;
  }
}

TEST(GoldSuite, DeterministicAndStableUnderRoundTrip) {
  const auto schema = t::fixture_union();
  for (const auto& c : t::load_suite()) {
    const auto sub = sub_schema_of_db(schema, c.db_id);
    const auto plan = parse_edl(c.edl);
    const auto a = compile(plan, sub);
    EXPECT_EQ(a, compile(plan, sub)) << c.id;
    EXPECT_EQ(a, compile(parse_edl(render_edl(plan)), sub)) << c.id;
  }
}
