#include <array>

#include "credsql/edl/edl.hpp"

namespace credsql::edl {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr std::array<std::string_view, 15> kKinds = {"column", "number",  "string", "null",     "star",
                                                     "call",   "binary",  "compare", "logical", "not",
                                                     "in",     "is_null", "between", "like",    "step_ref"};
constexpr std::array<std::string_view, 13> kOps = {"",   "+",  "-",  "*",  "/",   "=",  "!=",
                                                   "<",  "<=", ">",  ">=", "and", "or"};

template <std::size_t N>
std::size_t index_in(const std::array<std::string_view, N>& names, const std::string& s, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return i;
  }
  throw Error(ErrorCode::EdlParse, std::string("unknown ") + what + " '" + s + "' in plan JSON");
}

json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> opt_str(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

json exprs(const std::vector<Expr>& es) {
  json a = json::array();
  for (const auto& e : es) a.push_back(to_json(e));
  return a;
}

std::vector<Expr> exprs_from(const json& j) {
  std::vector<Expr> out;
  for (const auto& e : j) out.push_back(expr_from_json(e));
  return out;
}

SortOrder order_from(const json& j) {
  return j.get<std::string>() == "descending" ? SortOrder::Descending : SortOrder::Ascending;
}

}  // namespace

json to_json(const Expr& e) {
  json j = {{"kind", kKinds[static_cast<std::size_t>(e.kind)]}};
  if (e.op != Op::None) j["op"] = kOps[static_cast<std::size_t>(e.op)];
  if (!e.qualifier.empty()) j["qualifier"] = e.qualifier;
  if (!e.text.empty()) j["text"] = e.text;
  if (e.negated) j["negated"] = true;
  if (e.distinct) j["distinct"] = true;
  if (e.step) j["step"] = e.step;
  if (!e.args.empty()) j["args"] = exprs(e.args);
  return j;
}

Expr expr_from_json(const json& j) {
  Expr e;
  e.kind = static_cast<ExprKind>(index_in(kKinds, j.at("kind").get<std::string>(), "expression kind"));
  if (j.contains("op")) e.op = static_cast<Op>(index_in(kOps, j.at("op").get<std::string>(), "operator"));
  e.qualifier = j.value("qualifier", "");
  e.text = j.value("text", "");
  e.negated = j.value("negated", false);
  e.distinct = j.value("distinct", false);
  e.step = j.value("step", 0);
  if (j.contains("args")) e.args = exprs_from(j.at("args"));
  return e;
}

namespace {

json op_args(const EdlOperator& op) {
  return std::visit(
      overloaded{
          [](const ScanTable& o) -> json { return {{"table", o.table}, {"alias", opt(o.alias)}}; },
          [](const Join& o) -> json {
            return {{"table", o.table}, {"alias", opt(o.alias)}, {"condition", to_json(o.condition)}};
          },
          [](const ReserveRows& o) -> json { return {{"input", o.input}, {"condition", to_json(o.condition)}}; },
          [](const Subquery& o) -> json {
            return {{"table", o.table},
                    {"alias", opt(o.alias)},
                    {"select_column", o.select_column ? to_json(*o.select_column) : json(nullptr)}};
          },
          [](const GroupBy& o) -> json { return {{"input", o.input}, {"columns", exprs(o.columns)}}; },
          [](const Having& o) -> json { return {{"input", o.input}, {"condition", to_json(o.condition)}}; },
          [](const Sort& o) -> json {
            return {{"input", o.input}, {"column", to_json(o.column)}, {"order", to_string(o.order)}};
          },
          [](const Limit& o) -> json { return {{"input", o.input}, {"count", o.count}}; },
          [](const SelectColumn& o) -> json {
            return {{"input", o.input},
                    {"columns", exprs(o.columns)},
                    {"table_alias", opt(o.table_alias)},
                    {"distinct", o.distinct}};
          },
          [](const SetOperation& o) -> json {
            return {{"kind", to_string(o.kind)}, {"left_query", o.left_query}, {"right_query", o.right_query}};
          },
          [](const ArithmeticCalculation& o) -> json {
            return {{"output_column", o.output_column},
                    {"operation", to_string(o.operation)},
                    {"operands", exprs(o.operands)}};
          },
          [](const DateCalculation& o) -> json {
            return {{"output_column", o.output_column},
                    {"operation", to_string(o.operation)},
                    {"operands", exprs(o.operands)}};
          },
          [](const CaseStatement& o) -> json {
            return {{"output_column", o.output_column},
                    {"condition", to_json(o.condition)},
                    {"then_result", to_json(o.then_result)},
                    {"else_result", to_json(o.else_result)}};
          },
          [](const SubstringExtraction& o) -> json {
            return {{"source_column", to_json(o.source_column)},
                    {"start", o.start},
                    {"length", o.length},
                    {"output_column", o.output_column}};
          },
          [](const Casting& o) -> json { return {{"column", to_json(o.column)}, {"new_type", o.new_type}}; },
          [](const Ranking& o) -> json {
            return {{"column", to_json(o.column)},
                    {"order_column", to_json(o.order_column)},
                    {"order", to_string(o.order)},
                    {"function", "RANK"}};
          },
      },
      op);
}

EdlOperator op_from(const std::string& name, const json& a) {
  auto is = [&](std::string_view n) { return name == n; };
  if (is("Scan Table")) return ScanTable{a.at("table"), opt_str(a, "alias")};
  if (is("Join")) return Join{a.at("table"), opt_str(a, "alias"), expr_from_json(a.at("condition"))};
  if (is("Reserve Rows")) return ReserveRows{a.at("input"), expr_from_json(a.at("condition"))};
  if (is("Subquery")) {
    Subquery s{a.at("table"), opt_str(a, "alias"), std::nullopt};
    if (a.contains("select_column") && !a.at("select_column").is_null()) {
      s.select_column = expr_from_json(a.at("select_column"));
    }
    return s;
  }
  if (is("Group By")) return GroupBy{a.at("input"), exprs_from(a.at("columns"))};
  if (is("Having Clause")) return Having{a.at("input"), expr_from_json(a.at("condition"))};
  if (is("Sort")) return Sort{a.at("input"), expr_from_json(a.at("column")), order_from(a.at("order"))};
  if (is("Limit")) return Limit{a.at("input"), a.at("count")};
  if (is("Select Column")) {
    return SelectColumn{a.at("input"), exprs_from(a.at("columns")), opt_str(a, "table_alias"),
                        a.value("distinct", false)};
  }
  if (is("Set Operation")) {
    const auto k = a.at("kind").get<std::string>();
    return SetOperation{k == "union"       ? SetKind::Union
                        : k == "intersect" ? SetKind::Intersect
                                           : SetKind::Except,
                        a.at("left_query"), a.at("right_query")};
  }
  if (is("Arithmetic Calculation")) {
    static const std::array<std::string_view, 4> ops = {"addition", "subtraction", "multiplication", "division"};
    return ArithmeticCalculation{a.at("output_column"),
                                 static_cast<ArithmeticOp>(index_in(ops, a.at("operation"), "arithmetic operation")),
                                 exprs_from(a.at("operands"))};
  }
  if (is("Date Calculation")) {
    static const std::array<std::string_view, 5> ops = {"year", "month", "day", "day difference", "day addition"};
    return DateCalculation{a.at("output_column"),
                           static_cast<DateOp>(index_in(ops, a.at("operation"), "date operation")),
                           exprs_from(a.at("operands"))};
  }
  if (is("Case Statement")) {
    return CaseStatement{a.at("output_column"), expr_from_json(a.at("condition")),
                         expr_from_json(a.at("then_result")), expr_from_json(a.at("else_result"))};
  }
  if (is("Substring Extraction")) {
    return SubstringExtraction{expr_from_json(a.at("source_column")), a.at("start"), a.at("length"),
                               a.at("output_column")};
  }
  if (is("Casting")) return Casting{expr_from_json(a.at("column")), a.at("new_type")};
  if (is("Ranking")) {
    return Ranking{expr_from_json(a.at("column")), expr_from_json(a.at("order_column")), order_from(a.at("order"))};
  }
  throw Error(ErrorCode::EdlParse, "unknown operator '" + name + "' in plan JSON");
}

}  // namespace

json to_json(const EdlPlan& plan) {
  json steps = json::array();
  for (const auto& s : plan.steps) {
    steps.push_back({{"index", s.index},
                     {"operator", operator_name(s.op)},
                     {"args", op_args(s.op)},
                     {"refs", s.refs}});
  }
  return {{"root", plan.root}, {"steps", steps}};
}

EdlPlan plan_from_json(const json& j) {
  try {
    EdlPlan plan;
    for (const auto& s : j.at("steps")) {
      plan.steps.push_back(make_step(s.at("index"), op_from(s.at("operator"), s.at("args"))));
    }
    plan.root = j.value("root", plan.steps.empty() ? 0 : plan.steps.back().index);
    return plan;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::EdlParse, std::string("bad plan JSON: ") + e.what());
  }
}

json to_json(const Diagnostic& d) {
  return {{"step", d.step_index},
          {"line", d.line},
          {"severity", d.severity == Severity::Error ? "error" : "warning"},
          {"code", d.code},
          {"message", d.message}};
}

}  // namespace credsql::edl
