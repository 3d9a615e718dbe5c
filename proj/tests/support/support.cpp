#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "credsql/edl/expr.hpp"
#include "credsql/error.hpp"

namespace credsql::testing {

namespace fs = std::filesystem;
using namespace credsql::edl;

fs::path data_dir() { return CREDSQL_TEST_DATA_DIR; }
fs::path fixture_db_dir() { return CREDSQL_TEST_DB_DIR; }
fs::path fixture_db(const std::string& db_id) { return fixture_db_dir() / db_id / (db_id + ".sqlite"); }
fs::path tools_dir() { return CREDSQL_TEST_TOOLS_DIR; }

UnionSchema fixture_union() { return build_union_schema(load_tables_manifest(data_dir() / "fixtures" / "tables.json")); }

std::vector<SuiteCase> load_suite() {
  std::ifstream in(data_dir() / "gold_edl" / "suite.json");
  if (!in) throw Error(ErrorCode::FileNotFound, "gold EDL suite");
  std::vector<SuiteCase> out;
  for (const auto& c : nlohmann::json::parse(in)) {
    out.push_back({c.at("id"), c.at("db_id"), c.at("question"), c.at("edl"), c.at("gold_sql")});
  }
  return out;
}

// ---------------------------------------------------------------------------
// plan generator

namespace {

const std::vector<std::string> kTables = {"Student", "Has_Pet", "Pets", "country", "city", "orders", "order items"};
const std::vector<std::string> kColumns = {"Name", "Age", "city", "PetType", "price", "StuID", "order_date",
                                           "weight", "Population", "Code"};
const std::vector<std::string> kAliases = {"T1", "T2", "T3", "T4"};
const std::vector<std::string> kOutputs = {"total", "age_in_months", "label", "prefix", "due", "gap"};
const std::vector<std::string> kStrings = {"cat", "dog", "O'Brien", "Asia", "New York", "%ton"};
const std::vector<std::string> kTypes = {"integer", "text", "real"};

struct Gen {
  std::mt19937_64& rng;
  int index = 1;  // step being built

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
  template <class T>
  const T& one(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(pick(static_cast<int>(v.size())))];
  }
  int earlier() { return 1 + pick(index - 1); }

  std::string number() {
    if (coin(0.7)) return std::to_string(pick(2000));
    return std::to_string(pick(100)) + "." + std::to_string(1 + pick(9));
  }

  Expr column() {
    if (coin(0.1)) return Expr::column("Free Meal Count");
    return Expr::column(one(kColumns), coin(0.4) ? one(kAliases) : std::string{});
  }

  Expr value() {
    switch (pick(4)) {
      case 0: return Expr::number(number());
      case 1: return Expr::string(one(kStrings));
      default: return column();
    }
  }

  Expr slot_value() {
    switch (pick(6)) {
      case 0: return Expr::call("count", {Expr::star()});
      case 1: return Expr::call(coin() ? "avg" : "max", {column()});
      case 2: return Expr::call("count", {column()}, true);
      case 3: return Expr::binary(coin() ? Op::Mul : Op::Add, column(), Expr::number(number()));
      default: return column();
    }
  }

  Expr condition(int depth = 0) {
    const int kind = depth >= 2 ? pick(8) : pick(10);
    switch (kind) {
      case 0: return Expr::compare(static_cast<Op>(static_cast<int>(Op::Eq) + pick(6)), column(), value());
      case 1: return Expr::in_step(column(), earlier(), coin());
      case 2: {
        std::vector<Expr> items;
        const int n = 1 + pick(3);
        for (int i = 0; i < n; ++i) items.push_back(coin() ? Expr::number(number()) : Expr::string(one(kStrings)));
        return Expr::in_list(column(), std::move(items), coin());
      }
      case 3: return Expr::is_null(column(), coin());
      case 4: return Expr::between(column(), Expr::number(number()), Expr::number(number()), coin());
      case 5: return Expr::like(column(), Expr::string(one(kStrings)), coin());
      case 6: return Expr::compare(Op::Gt, column(), Expr::step_ref(earlier()));
      case 7: return Expr::compare(Op::Eq, column(), column());
      case 8: return Expr::logical(coin() ? Op::And : Op::Or, condition(depth + 1), condition(depth + 1));
      default: return Expr::negate(condition(depth + 1));
    }
  }

  std::vector<Expr> slot_list(int max) {
    std::vector<Expr> out;
    const int n = 1 + pick(max);
    for (int i = 0; i < n; ++i) out.push_back(slot_value());
    return out;
  }

  std::optional<std::string> alias() { return coin() ? std::optional(one(kAliases)) : std::nullopt; }

  EdlOperator op(std::size_t kind) {
    switch (kind) {
      case 0: return ScanTable{one(kTables), alias()};
      case 1: return Join{one(kTables), alias(), Expr::compare(Op::Eq, column(), column())};
      case 2: return ReserveRows{earlier(), condition()};
      case 3: {
        Subquery s{one(kTables), alias(), std::nullopt};
        if (coin()) s.select_column = column();
        return s;
      }
      case 4: return GroupBy{earlier(), slot_list(2)};
      case 5: return Having{earlier(), Expr::compare(Op::Gt, Expr::call("count", {Expr::star()}), Expr::number(number()))};
      case 6: return Sort{earlier(), slot_value(), coin() ? SortOrder::Ascending : SortOrder::Descending};
      case 7: return Limit{earlier(), 1 + pick(20)};
      case 8: {
        SelectColumn s{earlier(), slot_list(3), std::nullopt, coin(0.3)};
        if (coin(0.3)) s.table_alias = one(kAliases);
        return s;
      }
      case 9: {
        const int a = earlier();
        int b = earlier();
        return SetOperation{static_cast<SetKind>(pick(3)), a, b};
      }
      case 10: {
        std::vector<Expr> operands{column(), coin() ? column() : Expr::number(number())};
        return ArithmeticCalculation{one(kOutputs), static_cast<ArithmeticOp>(pick(4)), std::move(operands)};
      }
      case 11: {
        const auto dop = static_cast<DateOp>(pick(5));
        std::vector<Expr> operands{column()};
        if (dop == DateOp::DayDifference) operands.push_back(column());
        if (dop == DateOp::DayAddition) operands.push_back(Expr::number(std::to_string(1 + pick(30))));
        return DateCalculation{one(kOutputs), dop, std::move(operands)};
      }
      case 12:
        return CaseStatement{one(kOutputs), condition(1), Expr::string(one(kStrings)),
                             coin() ? Expr::string(one(kStrings)) : Expr::number(number())};
      case 13: return SubstringExtraction{column(), 1 + pick(5), 1 + pick(10), one(kOutputs)};
      case 14: return Casting{column(), one(kTypes)};
      default: return Ranking{column(), column(), coin() ? SortOrder::Ascending : SortOrder::Descending};
    }
  }
};

bool is_leaf(std::size_t kind) { return kind == 0 || kind == 3; }

EdlPlan build(std::mt19937_64& rng, int n_steps, std::optional<std::size_t> forced_last) {
  Gen g{rng};
  EdlPlan plan;
  for (int i = 1; i <= n_steps; ++i) {
    g.index = i;
    std::size_t kind = static_cast<std::size_t>(g.pick(static_cast<int>(kOperatorCount)));
    if (i == n_steps && forced_last) kind = *forced_last;
    if (i == 1) kind = is_leaf(kind) ? kind : (g.coin() ? 0 : 3);
    auto op = g.op(kind);
    plan.steps.push_back(make_step(i, std::move(op)));
  }
  plan.root = n_steps;
  return plan;
}

}  // namespace

EdlPlan random_plan(std::mt19937_64& rng, int max_steps) {
  const int n = std::uniform_int_distribution<int>(1, std::max(1, max_steps))(rng);
  return build(rng, n, std::nullopt);
}

std::vector<EdlPlan> plan_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<EdlPlan> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < kOperatorCount) {
      const int steps = is_leaf(i) ? 1 + static_cast<int>(i % 3) : 2 + static_cast<int>(i % 4);
      out.push_back(build(rng, steps, i));
    } else {
      out.push_back(random_plan(rng));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// clustering pseudocode

std::vector<LiteralRecord> literal_clustering(const std::vector<ClusterInput>& columns, double s1) {
  int current_max_cat = 0;
  std::vector<LiteralRecord> visited_vector;
  for (const auto& [uuid, v, text] : columns) {
    if (visited_vector.empty()) {
      visited_vector.push_back({uuid, v, 0, 1});
    } else {
      std::vector<const LiteralRecord*> filtered_results;
      std::vector<int> cluster_categories_list(static_cast<std::size_t>(current_max_cat + 1), 0);
      for (const auto& vd : visited_vector) {
        const double similarity = v.dot(vd.vector);
        if (similarity > s1) {
          filtered_results.push_back(&vd);
          cluster_categories_list[static_cast<std::size_t>(vd.cluster_categories)] += 1;
        }
      }
      if (filtered_results.empty()) {
        current_max_cat += 1;
        visited_vector.push_back({uuid, v, current_max_cat, 1});
      } else {
        const int m = static_cast<int>(std::max_element(cluster_categories_list.begin(), cluster_categories_list.end()) -
                                       cluster_categories_list.begin());
        int clu_size = 0;
        for (auto& item : visited_vector) {
          if (item.cluster_categories == m) {
            item.cluster_size += 1;
            clu_size = item.cluster_size;
          }
        }
        visited_vector.push_back({uuid, v, m, clu_size});
      }
    }
  }
  return visited_vector;
}

std::vector<ClusterInput> random_columns(std::mt19937_64& rng, std::size_t n, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> spread(0.2, 1.2);
  std::vector<Vector> anchors(3, Vector(dim));
  for (auto& a : anchors) {
    for (int i = 0; i < dim; ++i) a[i] = gauss(rng);
    a.normalize();
  }
  const double noise = spread(rng);
  std::vector<ClusterInput> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v = anchors[std::uniform_int_distribution<std::size_t>(0, anchors.size() - 1)(rng)];
    for (int d = 0; d < dim; ++d) v[d] += noise * gauss(rng);
    v.normalize();
    out.push_back({"c" + std::to_string(i), v, "column " + std::to_string(i)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// score arithmetic fixture

namespace {

Vector v3(double x, double y, double z) {
  Vector v(3);
  v << x, y, z;
  return v;
}

}  // namespace

Vector two_table_question() { return v3(1, 0, 0); }

SchemaIndex two_table_index() {
  std::vector<TableIndexEntry> tables = {{v3(0.5, std::sqrt(0.75), 0), "db.T1", "first"},
                                         {v3(0.55, std::sqrt(1 - 0.55 * 0.55), 0), "db.T2", "second"}};
  const Vector col = v3(0.8, 0, 0.6);
  // sizes are stubbed; only ColumnIndexEntry::cluster_size enters the score
  std::vector<ColumnIndexEntry> columns = {{col, 0, 4, "city", "city", "db.T1"},
                                           {col, 1, 1, "employee_id", "employee id", "db.T2"}};
  ClusterTable ct;
  ct.assignments = {{"db.T1.city", 0, 1}, {"db.T2.employee_id", 1, 1}};
  ct.cluster_of = {{"db.T1.city", 0}, {"db.T2.employee_id", 1}};
  ct.sizes = {{0, 4}, {1, 1}};
  ct.cluster_count = 2;
  return SchemaIndex(std::move(tables), std::move(columns), std::move(ct), "stub");
}

// ---------------------------------------------------------------------------
// fakes

ScriptedChat::ScriptedChat(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

std::string ScriptedChat::complete(const Conversation& messages) {
  std::lock_guard lock(mu_);
  seen_.push_back(messages);
  if (replies_.empty()) throw Error(ErrorCode::LlmUnavailable, "script exhausted");
  auto r = std::move(replies_.front());
  replies_.pop_front();
  return r;
}

std::vector<Conversation> ScriptedChat::seen() const {
  std::lock_guard lock(mu_);
  return seen_;
}

CannedTransport::CannedTransport(std::vector<HttpResponse> responses)
    : responses_(responses.begin(), responses.end()) {}

HttpResponse CannedTransport::post(const std::string& url, const HttpHeaders&, const std::string& body, int) {
  urls.push_back(url);
  bodies.push_back(body);
  if (responses_.empty()) throw Error(ErrorCode::ProviderUnavailable, "no canned response left");
  auto r = responses_.front();
  responses_.pop_front();
  return r;
}

}  // namespace credsql::testing
