#include "credsql/edl/edl.hpp"

namespace credsql::edl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string ref(int step) { return "#" + std::to_string(step); }

std::string slot(const Expr& e) { return "[" + render_column_slot(e) + "]"; }

std::string name_slot(const std::string& name) { return "[" + name + "]"; }

// "[a]", "[a] and [b]", "[a], [b] and [c]"
std::string slot_list(const std::vector<Expr>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += i + 1 == items.size() ? " and " : ", ";
    out += slot(items[i]);
  }
  return out;
}

std::string columns_word(const std::vector<Expr>& items) { return items.size() == 1 ? "column" : "columns"; }

std::string alias_part(const std::optional<std::string>& alias) {
  return alias ? " aliased as " + name_slot(*alias) : std::string{};
}

std::string order_word(SortOrder o) { return std::string(to_string(o)); }

std::string arith_word(ArithmeticOp op) { return std::string(to_string(op)); }

}  // namespace

std::string render_step(const EdlStep& step) {
  const std::string body = std::visit(
      overloaded{
          [](const ScanTable& o) {
            return "Scan Table: Retrieve all rows from the " + name_slot(o.table) + " table" + alias_part(o.alias) +
                   ".";
          },
          [](const Subquery& o) {
            std::string s = "Subquery: Retrieve all rows from the " + name_slot(o.table) + " table" + alias_part(o.alias);
            if (o.select_column) s += " in a subquery and select the " + slot(*o.select_column) + " column";
            return s + ".";
          },
          [](const Join& o) {
            return "Join the " + name_slot(o.table) + " table" + alias_part(o.alias) + " on the condition that " +
                   render_expression(o.condition) + ".";
          },
          [](const ReserveRows& o) {
            return "Reserve rows of " + ref(o.input) + " where " + render_expression(o.condition) + ".";
          },
          [](const GroupBy& o) {
            return "Group " + ref(o.input) + " by the " + slot_list(o.columns) + " " + columns_word(o.columns) + ".";
          },
          [](const Having& o) {
            return "Apply Having Clause: Reserve the grouped rows of " + ref(o.input) + " where " +
                   render_expression(o.condition) + ".";
          },
          [](const Sort& o) {
            return "Order " + ref(o.input) + " by the " + slot(o.column) + " column in " + order_word(o.order) +
                   " order.";
          },
          [](const Limit& o) {
            return "Limit " + ref(o.input) + " to the top " + std::to_string(o.count) + " record(s).";
          },
          [](const SelectColumn& o) {
            std::string s = "Select the ";
            if (o.distinct) s += "distinct ";
            s += slot_list(o.columns) + " " + columns_word(o.columns);
            if (o.table_alias) s += " from the " + name_slot(*o.table_alias) + " table";
            return s + " from the result of " + ref(o.input) + ".";
          },
          [](const SetOperation& o) {
            const std::string kind(to_string(o.kind));
            if (o.kind == SetKind::Except) {
              return "Apply " + kind + " operation: Exclude the results in " + ref(o.right_query) +
                     " from the results in " + ref(o.left_query) + ".";
            }
            return "Apply " + kind + " operation: Include the results in " + ref(o.right_query) +
                   " in the results in " + ref(o.left_query) + ".";
          },
          [](const ArithmeticCalculation& o) {
            return "Compute " + name_slot(o.output_column) + " as the " + arith_word(o.operation) + " of " +
                   slot_list(o.operands) + ".";
          },
          [](const DateCalculation& o) {
            return "Compute " + name_slot(o.output_column) + " as the " + std::string(to_string(o.operation)) +
                   " of " + slot_list(o.operands) + ".";
          },
          [](const CaseStatement& o) {
            return "Compute " + name_slot(o.output_column) + " as a case statement where " +
                   render_expression(o.condition) + ", then " + render_expression(o.then_result) + ", else " +
                   render_expression(o.else_result) + ".";
          },
          [](const SubstringExtraction& o) {
            return "Extract substring from " + slot(o.source_column) + " starting at position " +
                   std::to_string(o.start) + " for " + std::to_string(o.length) + " characters as " +
                   name_slot(o.output_column) + ".";
          },
          [](const Casting& o) { return "Cast " + slot(o.column) + " as " + o.new_type + "."; },
          [](const Ranking& o) {
            return "Compute the rank of " + slot(o.column) + " ordered by " + slot(o.order_column) + " in " +
                   order_word(o.order) + " order using the RANK( ) window function.";
          },
      },
      step.op);
  return ref(step.index) + ". " + body;
}

std::string render_edl(const EdlPlan& plan) {
  std::string out;
  for (const auto& s : plan.steps) out += render_step(s) + "\n";
  return out;
}

}  // namespace credsql::edl
