#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "credsql/error.hpp"
#include "credsql/schema.hpp"
#include "support.hpp"

using namespace credsql;
using nlohmann::json;
namespace t = credsql::testing;

namespace {

json db(const std::string& id, const std::vector<std::pair<std::string, std::vector<std::string>>>& tables) {
  json names = json::array();
  json cols = json::array({json::array({-1, "*"})});
  json types = json::array({"text"});
  for (std::size_t i = 0; i < tables.size(); ++i) {
    names.push_back(tables[i].first);
    for (const auto& c : tables[i].second) {
      cols.push_back(json::array({static_cast<int>(i), c}));
      types.push_back("text");
    }
  }
  return {{"db_id", id},
          {"table_names_original", names},
          {"column_names_original", cols},
          {"column_types", types},
          {"primary_keys", json::array()},
          {"foreign_keys", json::array()}};
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Manifest, OneDbOneTable) {
  const auto schemas = parse_tables_manifest(json::array({db("geo", {{"city", {"name", "state", "population"}}})}));
  ASSERT_EQ(schemas.size(), 1u);
  ASSERT_EQ(schemas[0].tables.size(), 1u);
  EXPECT_EQ(schemas[0].tables[0].columns.size(), 3u);
}

TEST(Manifest, DuplicateDbIdIsMalformed) {
  const auto m = json::array({db("a", {{"t", {"x"}}}), db("a", {{"u", {"y"}}})});
  EXPECT_EQ(code_of([&] { parse_tables_manifest(m); }), ErrorCode::MalformedManifest);
}

TEST(Manifest, MissingFieldIsMalformed) {
  auto d = db("a", {{"t", {"x"}}});
  d.erase("column_types");
  EXPECT_EQ(code_of([&] { parse_tables_manifest(json::array({d})); }), ErrorCode::MalformedManifest);
}

TEST(Manifest, MissingFile) {
  EXPECT_EQ(code_of([] { load_tables_manifest("/nonexistent/tables.json"); }), ErrorCode::FileNotFound);
}

TEST(Manifest, DescriptionSynthesizedWhenAbsent) {
  const auto schemas = parse_tables_manifest(json::array({db("geo", {{"city", {"name", "population"}}})}));
  EXPECT_EQ(schemas[0].tables[0].description, "table city with columns name, population");
}

TEST(Manifest, FixtureManifestLoads) {
  const auto u = t::fixture_union();
  EXPECT_EQ(u.db_ids(), (std::set<std::string>{"pets_1", "store_1", "world_1"}));
  EXPECT_NE(u.find("pets_1.Student"), nullptr);
}

TEST(UnionSchema, SameTableNameInTwoDbs) {
  const auto u = build_union_schema(
      parse_tables_manifest(json::array({db("db1", {{"city", {"a"}}}), db("db2", {{"city", {"b"}}})})));
  std::set<std::string> names;
  for (const auto& tb : u.tables()) names.insert(tb.union_name);
  EXPECT_EQ(names, (std::set<std::string>{"db1.city", "db2.city"}));
}

TEST(UnionSchema, SingleTable) {
  const auto u = build_union_schema(parse_tables_manifest(json::array({db("db", {{"t", {"a"}}})})));
  ASSERT_EQ(u.table_count(), 1u);
  EXPECT_EQ(u.tables()[0].union_name, "db.t");
}

TEST(UnionSchema, BijectionAndPrefixRoundTrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    json m = json::array();
    std::size_t expected_tables = 0, expected_columns = 0;
    const int n_db = 1 + static_cast<int>(rng() % 5);
    for (int d = 0; d < n_db; ++d) {
      std::vector<std::pair<std::string, std::vector<std::string>>> tables;
      const int n_t = 1 + static_cast<int>(rng() % 4);
      for (int i = 0; i < n_t; ++i) {
        std::vector<std::string> cols;
        const int n_c = 1 + static_cast<int>(rng() % 5);
        for (int c = 0; c < n_c; ++c) cols.push_back("c" + std::to_string(c));
        tables.emplace_back("t" + std::to_string(i), cols);
        expected_columns += cols.size();
      }
      expected_tables += tables.size();
      m.push_back(db("db" + std::to_string(d), tables));
    }
    const auto u = build_union_schema(parse_tables_manifest(m));
    EXPECT_EQ(u.table_count(), expected_tables);
    EXPECT_EQ(u.column_count(), expected_columns);
    for (const auto& tb : u.tables()) EXPECT_EQ(strip_db_prefix(tb.union_name), tb.original_name);
  }
}

TEST(GoldTables, JoinInWorld) {
  const auto u = t::fixture_union();
  const auto g = gold_tables_of("SELECT count(*) FROM city JOIN country ON city.CountryCode = country.Code", u,
                                "world_1");
  EXPECT_EQ(g.tables, (std::set<std::string>{"world_1.city", "world_1.country"}));
}

TEST(GoldTables, Example2GoldSql) {
  const auto u = t::fixture_union();
  const auto g = gold_tables_of(
      "SELECT major, age FROM student WHERE stuid NOT IN (SELECT T1.stuid FROM student AS T1 JOIN has_pet AS T2 ON "
      "T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid WHERE T3.pettype = 'cat')",
      u, "pets_1");
  EXPECT_EQ(g.tables, (std::set<std::string>{"pets_1.Student", "pets_1.Has_Pet", "pets_1.Pets"}));
}

TEST(GoldTables, AliasExcluded) {
  const auto u = build_union_schema(parse_tables_manifest(json::array({db("db", {{"t", {"a"}}})})));
  EXPECT_EQ(gold_tables_of("SELECT T1.a FROM t AS T1", u, "db").tables, (std::set<std::string>{"db.t"}));
}

TEST(GoldTables, CteNameIsNotATable) {
  const auto u = t::fixture_union();
  const auto g = gold_tables_of("WITH big AS (SELECT * FROM country) SELECT Name FROM big", u, "world_1");
  EXPECT_EQ(g.tables, (std::set<std::string>{"world_1.country"}));
}

TEST(GoldTables, UnknownTableIsUnresolved) {
  const auto u = t::fixture_union();
  EXPECT_EQ(code_of([&] { gold_tables_of("SELECT * FROM nowhere", u, "world_1"); }), ErrorCode::UnresolvedTable);
}

TEST(GoldTables, JoinOrderDoesNotMatter) {
  const auto u = t::fixture_union();
  const auto a = gold_tables_of(
      "SELECT * FROM Student JOIN Has_Pet ON Student.StuID = Has_Pet.StuID JOIN Pets ON Pets.PetID = Has_Pet.PetID", u,
      "pets_1");
  const auto b = gold_tables_of(
      "SELECT * FROM Pets JOIN Has_Pet ON Pets.PetID = Has_Pet.PetID JOIN Student ON Student.StuID = Has_Pet.StuID", u,
      "pets_1");
  EXPECT_EQ(a, b);
}

TEST(SubSchema, SelectionKeepsOrderAndRestrictsColumns) {
  const auto u = t::fixture_union();
  const auto sub = sub_schema_from_selection(u, {"pets_1.Pets", "pets_1.Student"}, {{"pets_1.Student", {"Age"}}});
  ASSERT_EQ(sub.tables.size(), 2u);
  EXPECT_EQ(sub.tables[0].name, "Pets");
  ASSERT_EQ(sub.tables[1].columns.size(), 1u);
  EXPECT_EQ(sub.tables[1].columns[0].name, "Age");
  EXPECT_EQ(code_of([&] { sub_schema_from_selection(u, {"pets_1.Nope"}); }), ErrorCode::UnknownTable);
}

TEST(SubSchema, DdlCreatesEveryTable) {
  const auto ddl = to_ddl(sub_schema_of_db(t::fixture_union(), "pets_1"));
  EXPECT_NE(ddl.find("CREATE TABLE Student"), std::string::npos);
  EXPECT_NE(ddl.find("CREATE TABLE Has_Pet"), std::string::npos);
}
