#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "credsql/config.hpp"
#include "credsql/error.hpp"
#include "credsql/eval.hpp"
#include "credsql/sqlite.hpp"
#include "support.hpp"

using namespace credsql;
namespace t = credsql::testing;

namespace {

struct ExCase {
  const char* pred;
  const char* gold;
  bool expected;
};

// Hand-labelled; the gold side always runs.
const ExCase kBattery[] = {
    {"SELECT count(*) FROM Student", "SELECT count(*) FROM Student", true},
    {"SELECT Fname, Age FROM Student", "SELECT Fname, Age FROM Student ORDER BY StuID DESC", false},  // gold ordered
    {"SELECT Fname, Age FROM Student ORDER BY StuID DESC", "SELECT Fname, Age FROM Student ORDER BY StuID DESC", true},
    {"SELECT Fname, Age FROM Student ORDER BY Age", "SELECT Fname, Age FROM Student", true},  // permutation
    {"SELECT Age, Fname FROM Student", "SELECT Fname, Age FROM Student", false},            // column order
    {"SELECT Fname AS first FROM Student", "SELECT Fname FROM Student", true},              // names ignored
    {"SELECT count(*) FROM Student WHERE Age > 20", "SELECT count(*) FROM Student WHERE Age > 21", false},
    {"SELECT StuID FROM Student WHERE Sex = 'F'", "SELECT StuID FROM Student WHERE Sex = 'M'", false},
    {"SELECT nope FROM Student", "SELECT StuID FROM Student", false},  // engine error on the prediction
    {"this is not sql", "SELECT 1", false},
    {"SELECT DISTINCT city_code FROM Student", "SELECT city_code FROM Student GROUP BY city_code", true},
    {"SELECT city_code FROM Student", "SELECT DISTINCT city_code FROM Student", false},  // multiset
    {"SELECT max(Age) FROM Student", "SELECT Age FROM Student ORDER BY Age DESC LIMIT 1", true},
    {"SELECT PetType, count(*) FROM Pets GROUP BY PetType",
     "SELECT PetType, count(*) FROM Pets GROUP BY PetType ORDER BY count(*) DESC", false},  // gold ordered, groups differ
    {"SELECT StuID FROM Has_Pet JOIN Pets ON Has_Pet.PetID = Pets.PetID WHERE PetType = 'dog'",
     "SELECT StuID FROM Has_Pet WHERE PetID IN (SELECT PetID FROM Pets WHERE PetType = 'dog')", true},
    {"SELECT 1.0", "SELECT 1", false},  // REAL vs INTEGER
    {"SELECT NULL", "SELECT NULL", true},
    {"SELECT avg(weight) FROM Pets", "SELECT sum(weight) / count(*) FROM Pets", true},
    {"SELECT Fname FROM Student WHERE 0", "SELECT Fname FROM Student WHERE Age > 100", true},  // both empty
    {"SELECT Fname FROM Student; SELECT 1", "SELECT Fname FROM Student", false},            // two statements
};

ExamplePair example(std::string id, std::string db, std::string gold, std::optional<std::string> diff = {}) {
  return {std::move(id), std::move(db), "q", std::move(gold), std::move(diff)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct PipelineRig {
  CliConfig config;
  UnionSchema schema;
  TrigramEmbedder provider;
  SchemaIndex index;
  std::vector<ExamplePair> questions;
  PipelineOptions opts;

  PipelineRig()
      : config(load_config(t::data_dir() / "pipeline" / "config.toml", [](const std::string&) {
          return std::optional<std::string>{};
        })),
        schema(build_union_schema(load_tables_manifest(config.paths.manifest))),
        provider(config.embedding.dim),
        index(build_index(schema, provider, {config.retrieval.cluster_options()})),
        questions(load_questions(config.paths.questions)) {
    opts.retrieval = config.retrieval.retrieval_options();
    opts.parallelism = config.parallelism;
    opts.db_dir = t::fixture_db_dir();
    opts.few_shots = load_few_shots(config.paths.few_shots);
  }
};

// Fails any conversation that mentions `needle`, otherwise defers.
class Saboteur final : public ChatClient {
 public:
  Saboteur(ChatClient& inner, std::string needle) : inner_(inner), needle_(std::move(needle)) {}
  std::string complete(const Conversation& m) override {
    if (m.at(1).content.find(needle_) != std::string::npos) throw Error(ErrorCode::LlmUnavailable, "injected");
    return inner_.complete(m);
  }

 private:
  ChatClient& inner_;
  std::string needle_;
};

}  // namespace

TEST(Execution, HandLabelledBattery) {
  const auto db = t::fixture_db("pets_1");
  for (const auto& c : kBattery) {
    EXPECT_EQ(execution_accuracy(c.pred, c.gold, db), c.expected) << c.pred << "  vs  " << c.gold;
  }
}

TEST(Execution, ReflexiveAndSymmetric) {
  const auto db = t::fixture_db("pets_1");
  for (const auto& c : kBattery) {
    if (execution_verdict(c.gold, c.gold, db).match != true) ADD_FAILURE() << c.gold;
    if (!execution_accuracy(c.pred, c.gold, db)) continue;
    // symmetry only holds when neither side imposes an order
    if (!has_top_level_order_by(c.pred) && !has_top_level_order_by(c.gold)) {
      EXPECT_TRUE(execution_accuracy(c.gold, c.pred, db)) << c.pred;
    }
  }
}

TEST(Execution, MismatchReason) {
  const auto v = execution_verdict("SELECT 1", "SELECT 1 UNION ALL SELECT 2", t::fixture_db("pets_1"));
  EXPECT_FALSE(v.match);
  EXPECT_EQ(v.reason, "results differ (1 vs 2 rows)");
}

TEST(Execution, GoldFailureIsAnError) {
  try {
    execution_verdict("SELECT 1", "SELECT nope", t::fixture_db("pets_1"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EngineError);
  }
}

TEST(Sqlite, SingleRowAndErrors) {
  const auto rs = execute_sql(t::fixture_db("pets_1"), "SELECT 1");
  ASSERT_EQ(rs.rows.size(), 1u);
  EXPECT_EQ(rs.rows[0][0], Value(std::int64_t{1}));
  EXPECT_THROW(execute_sql(t::fixture_db("pets_1"), "SELEC 1"), Error);
}

TEST(Sqlite, Example2GoldSnapshot) {
  const auto rs = execute_sql(t::fixture_db("pets_1"),
                              "SELECT major, age FROM student WHERE stuid NOT IN (SELECT T1.stuid FROM student AS T1 "
                              "JOIN has_pet AS T2 ON T1.stuid = T2.stuid JOIN pets AS T3 ON T3.petid = T2.petid "
                              "WHERE T3.pettype = 'cat')");
  // 34 students, two of them (1001, 1002) own the two cats
  EXPECT_EQ(rs.rows.size(), 32u);
  EXPECT_EQ(rs.columns, (std::vector<std::string>{"Major", "Age"}));  // declared names
}

TEST(Sqlite, ProgressHandlerTimesOut) {
  const auto sql = "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT count(*) FROM c";
  try {
    execute_sql(t::fixture_db("pets_1"), sql, std::chrono::milliseconds(50));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Timeout);
  }
}

TEST(ResultsMatch, OrderAndMultiplicity) {
  ResultSet a{{"x"}, {{std::int64_t{1}}, {std::int64_t{2}}, {std::int64_t{2}}}};
  ResultSet b{{"y"}, {{std::int64_t{2}}, {std::int64_t{1}}, {std::int64_t{2}}}};
  ResultSet c{{"x"}, {{std::int64_t{1}}, {std::int64_t{2}}}};
  EXPECT_TRUE(results_match(a, b, false));
  EXPECT_FALSE(results_match(a, b, true));
  EXPECT_FALSE(results_match(a, c, false));
  EXPECT_TRUE(results_match(a, a, true));
}

TEST(OrderBy, TopLevelOnly) {
  EXPECT_TRUE(has_top_level_order_by("SELECT a FROM t ORDER BY a"));
  EXPECT_TRUE(has_top_level_order_by("select a from t order\n by a"));
  EXPECT_FALSE(has_top_level_order_by("SELECT a FROM (SELECT a FROM t ORDER BY a)"));
  EXPECT_FALSE(has_top_level_order_by("SELECT 'ORDER BY' FROM t"));
  EXPECT_FALSE(has_top_level_order_by("SELECT \"order by\" FROM t"));
}

TEST(Questions, ParseAndReject) {
  const auto qs = parse_questions(
      "{\"question_id\":\"a\",\"db_id\":\"d\",\"question\":\"q\",\"gold_sql\":\"SELECT 1\"}\n\n"
      "{\"question_id\":\"b\",\"db_id\":\"d\",\"question\":\"q\",\"gold_sql\":\"SELECT 2\",\"difficulty\":\"hard\"}\n");
  ASSERT_EQ(qs.size(), 2u);
  EXPECT_FALSE(qs[0].difficulty.has_value());
  EXPECT_EQ(qs[1].difficulty, "hard");
  EXPECT_THROW(parse_questions("{\"question_id\":\"a\"}"), Error);
  EXPECT_THROW(parse_questions("not json"), Error);
  EXPECT_THROW(load_questions("/nonexistent/q.jsonl"), Error);
}

TEST(Questions, ResolveDbPath) {
  EXPECT_EQ(resolve_db_path(t::fixture_db_dir(), "pets_1"), t::fixture_db("pets_1"));
  EXPECT_FALSE(resolve_db_path(t::fixture_db_dir(), "no_such_db").has_value());
}

TEST(Pipeline, EmptyBatch) {
  PipelineRig rig;
  t::ScriptedChat chat({});
  const auto r = run_pipeline({}, rig.schema, rig.index, rig.provider, chat, rig.config.llm, rig.opts);
  EXPECT_EQ(r.n_questions, 0);
  EXPECT_TRUE(r.questions.empty());
  EXPECT_TRUE(r.failures.empty());
  EXPECT_TRUE(chat.seen().empty());
}

TEST(Pipeline, ReplayMatchesSnapshot) {
  PipelineRig rig;
  auto client = make_chat_client(rig.config.llm, std::make_shared<FailOnConnectTransport>());
  const auto r = run_pipeline(rig.questions, rig.schema, rig.index, rig.provider, *client, rig.config.llm, rig.opts);
  EXPECT_EQ(to_json(r).dump(2) + "\n", slurp(t::data_dir() / "pipeline" / "expected_report.json"));
}

TEST(Pipeline, AllBucketIsTheMean) {
  PipelineRig rig;
  auto client = make_chat_client(rig.config.llm, std::make_shared<FailOnConnectTransport>());
  const auto r = run_pipeline(rig.questions, rig.schema, rig.index, rig.provider, *client, rig.config.llm, rig.opts);
  const double hits = std::accumulate(r.questions.begin(), r.questions.end(), 0.0,
                                      [](double s, const QuestionResult& q) { return s + q.ex; });
  EXPECT_NEAR(r.ex_by_bucket.at("all"), hits / r.n_questions, 1e-9);
}

TEST(Pipeline, FailuresStayIsolated) {
  PipelineRig rig;
  rig.opts.parallelism = 1;
  const auto baseline = [&] {
    auto c = make_chat_client(rig.config.llm, std::make_shared<FailOnConnectTransport>());
    return run_pipeline(rig.questions, rig.schema, rig.index, rig.provider, *c, rig.config.llm, rig.opts);
  }();

  auto replay = make_chat_client(rig.config.llm, std::make_shared<FailOnConnectTransport>());
  Saboteur client(*replay, "Question: Find the ids of students who own a dog.");
  const auto r = run_pipeline(rig.questions, rig.schema, rig.index, rig.provider, client, rig.config.llm, rig.opts);

  ASSERT_EQ(r.questions.size(), baseline.questions.size());
  EXPECT_FALSE(r.questions[0].ex);
  const auto sabotaged = std::find_if(r.failures.begin(), r.failures.end(),
                                      [](const StageFailure& f) { return f.question_id == "pets_dog_owners"; });
  ASSERT_NE(sabotaged, r.failures.end());
  EXPECT_EQ(sabotaged->stage, "select");
  for (std::size_t i = 1; i < r.questions.size(); ++i) {
    EXPECT_EQ(r.questions[i].ex, baseline.questions[i].ex) << r.questions[i].question_id;
    EXPECT_EQ(r.questions[i].sql, baseline.questions[i].sql);
  }
}

TEST(Pipeline, MissingDatabaseIsAConfigError) {
  PipelineRig rig;
  rig.opts.db_dir = "/nonexistent";
  t::ScriptedChat chat({});
  try {
    run_pipeline(rig.questions, rig.schema, rig.index, rig.provider, chat, rig.config.llm, rig.opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
  }
}

TEST(Recall, ReportCountsOnlyExtractableGold) {
  PipelineRig rig;
  auto qs = rig.questions;
  qs.push_back(example("broken", "pets_1", "SELECT * FROM Nowhere"));
  const auto r = recall_report(qs, rig.schema, rig.index, rig.provider, {1, 3}, rig.opts.retrieval);
  EXPECT_EQ(r.n_questions, static_cast<int>(rig.questions.size()));
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(r.failures[0].stage, "gold");
  EXPECT_NEAR(r.recall_at.at(1), 0.638888888888889, 1e-9);
}
