#include "credsql/edl/plan.hpp"

#include <array>

namespace credsql::edl {

namespace {
constexpr std::array<std::string_view, kOperatorCount> kNames = {
    "Scan Table",   "Join",          "Reserve Rows", "Subquery",          "Group By",
    "Having Clause", "Sort",         "Limit",        "Select Column",     "Set Operation",
    "Arithmetic Calculation", "Date Calculation", "Case Statement", "Substring Extraction", "Casting",
    "Ranking"};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
}  // namespace

std::string_view operator_name(std::size_t variant_index) { return kNames.at(variant_index); }
std::string_view operator_name(const EdlOperator& op) { return kNames[op.index()]; }

std::string_view to_string(SortOrder o) { return o == SortOrder::Ascending ? "ascending" : "descending"; }

std::string_view to_string(SetKind k) {
  switch (k) {
    case SetKind::Union: return "union";
    case SetKind::Intersect: return "intersect";
    case SetKind::Except: return "except";
  }
  return "union";
}

std::string_view to_string(ArithmeticOp o) {
  switch (o) {
    case ArithmeticOp::Addition: return "addition";
    case ArithmeticOp::Subtraction: return "subtraction";
    case ArithmeticOp::Multiplication: return "multiplication";
    case ArithmeticOp::Division: return "division";
  }
  return "addition";
}

std::string_view to_string(DateOp o) {
  switch (o) {
    case DateOp::Year: return "year";
    case DateOp::Month: return "month";
    case DateOp::Day: return "day";
    case DateOp::DayDifference: return "day difference";
    case DateOp::DayAddition: return "day addition";
  }
  return "year";
}

std::string format_diagnostic(const Diagnostic& d) {
  std::string out = d.severity == Severity::Error ? "error" : "warning";
  out += " [" + d.code + "]";
  if (d.step_index > 0) out += " at step #" + std::to_string(d.step_index);
  else if (d.line > 0) out += " at line " + std::to_string(d.line);
  return out + ": " + d.message;
}

std::string format_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) out += format_diagnostic(d) + "\n";
  return out;
}

bool has_errors(const std::vector<Diagnostic>& ds) {
  for (const auto& d : ds) {
    if (d.severity == Severity::Error) return true;
  }
  return false;
}

std::optional<int> primary_input(const EdlOperator& op, int index) {
  return std::visit(
      overloaded{
          [](const ScanTable&) -> std::optional<int> { return std::nullopt; },
          [](const Subquery&) -> std::optional<int> { return std::nullopt; },
          [](const SetOperation&) -> std::optional<int> { return std::nullopt; },
          [](const ReserveRows& o) -> std::optional<int> { return o.input; },
          [](const GroupBy& o) -> std::optional<int> { return o.input; },
          [](const Having& o) -> std::optional<int> { return o.input; },
          [](const Sort& o) -> std::optional<int> { return o.input; },
          [](const Limit& o) -> std::optional<int> { return o.input; },
          [](const SelectColumn& o) -> std::optional<int> { return o.input; },
          [index](const auto&) -> std::optional<int> { return index - 1; },
      },
      op);
}

std::set<int> compute_refs(const EdlOperator& op, int index) {
  std::set<int> refs;
  if (auto in = primary_input(op, index)) refs.insert(*in);
  auto add = [&](const Expr& e) {
    for (int s : step_refs(e)) refs.insert(s);
  };
  std::visit(overloaded{
                 [&](const Join& o) { add(o.condition); },
                 [&](const ReserveRows& o) { add(o.condition); },
                 [&](const Having& o) { add(o.condition); },
                 [&](const SetOperation& o) {
                   refs.insert(o.left_query);
                   refs.insert(o.right_query);
                 },
                 [&](const CaseStatement& o) {
                   add(o.condition);
                   add(o.then_result);
                   add(o.else_result);
                 },
                 [&](const ArithmeticCalculation& o) {
                   for (const auto& e : o.operands) add(e);
                 },
                 [&](const DateCalculation& o) {
                   for (const auto& e : o.operands) add(e);
                 },
                 [](const auto&) {},
             },
             op);
  return refs;
}

EdlStep make_step(int index, EdlOperator op) {
  EdlStep s;
  s.index = index;
  s.refs = compute_refs(op, index);
  s.op = std::move(op);
  return s;
}

}  // namespace credsql::edl
