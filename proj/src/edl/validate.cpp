#include <map>
#include <set>

#include "credsql/detail/strings.hpp"
#include "credsql/edl/edl.hpp"

namespace credsql::edl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

using detail::to_lower;

const std::set<std::string>& cast_types() {
  static const std::set<std::string> t = {"INTEGER", "INT",     "BIGINT", "SMALLINT", "REAL",    "FLOAT",
                                          "DOUBLE",  "NUMERIC", "DECIMAL", "TEXT",    "VARCHAR", "CHAR",
                                          "BLOB",    "BOOLEAN", "DATE",   "DATETIME"};
  return t;
}

// Table-introducing steps: (table, alias).
std::optional<std::pair<std::string, std::optional<std::string>>> source_of(const EdlOperator& op) {
  if (auto* s = std::get_if<ScanTable>(&op)) return std::make_pair(s->table, s->alias);
  if (auto* s = std::get_if<Subquery>(&op)) return std::make_pair(s->table, s->alias);
  if (auto* s = std::get_if<Join>(&op)) return std::make_pair(s->table, s->alias);
  return std::nullopt;
}

template <typename F>
void for_each_expr(const EdlOperator& op, F&& f) {
  std::visit(overloaded{
                 [&](const Join& o) { f(o.condition); },
                 [&](const ReserveRows& o) { f(o.condition); },
                 [&](const Subquery& o) {
                   if (o.select_column) f(*o.select_column);
                 },
                 [&](const GroupBy& o) {
                   for (const auto& e : o.columns) f(e);
                 },
                 [&](const Having& o) { f(o.condition); },
                 [&](const Sort& o) { f(o.column); },
                 [&](const SelectColumn& o) {
                   for (const auto& e : o.columns) f(e);
                 },
                 [&](const ArithmeticCalculation& o) {
                   for (const auto& e : o.operands) f(e);
                 },
                 [&](const DateCalculation& o) {
                   for (const auto& e : o.operands) f(e);
                 },
                 [&](const CaseStatement& o) {
                   f(o.condition);
                   f(o.then_result);
                   f(o.else_result);
                 },
                 [&](const SubstringExtraction& o) { f(o.source_column); },
                 [&](const Casting& o) { f(o.column); },
                 [&](const Ranking& o) {
                   f(o.column);
                   f(o.order_column);
                 },
                 [](const auto&) {},
             },
             op);
}

std::optional<std::string> computed_name(const EdlOperator& op) {
  return std::visit(overloaded{
                        [](const ArithmeticCalculation& o) -> std::optional<std::string> { return o.output_column; },
                        [](const DateCalculation& o) -> std::optional<std::string> { return o.output_column; },
                        [](const CaseStatement& o) -> std::optional<std::string> { return o.output_column; },
                        [](const SubstringExtraction& o) -> std::optional<std::string> { return o.output_column; },
                        [](const Ranking& o) -> std::optional<std::string> { return o.column.text + "_rank"; },
                        [](const auto&) -> std::optional<std::string> { return std::nullopt; },
                    },
                    op);
}

class Validator {
 public:
  Validator(const EdlPlan& plan, const SubSchema& schema) : plan_(plan), schema_(schema) {}

  std::vector<Diagnostic> run() {
    if (!check_structure()) return out_;
    collect_scopes();
    for (const auto& step : plan_.steps) check_step(step);
    check_unused();
    return out_;
  }

 private:
  void error(int step, std::string code, std::string message) {
    out_.push_back(Diagnostic{step, Severity::Error, std::move(code), std::move(message), 0});
  }

  bool check_structure() {
    if (plan_.steps.empty()) {
      error(0, "EmptyPlan", "plan has no steps");
      return false;
    }
    bool ok = true;
    for (std::size_t i = 0; i < plan_.steps.size(); ++i) {
      const auto& s = plan_.steps[i];
      if (s.index != static_cast<int>(i) + 1) {
        error(s.index, "NonContiguousNumbering", "expected step #" + std::to_string(i + 1));
        return false;
      }
      for (int r : compute_refs(s.op, s.index)) {
        if (r < 1 || r >= s.index) {
          error(s.index, "DanglingReference", "refers to #" + std::to_string(r) + ", which is not an earlier step");
          ok = false;
        }
      }
    }
    return ok;
  }

  int base_of(int index) const {
    int cur = index;
    while (auto in = primary_input(plan_.step(cur).op, cur)) cur = *in;
    return cur;
  }

  void collect_scopes() {
    for (const auto& s : plan_.steps) {
      block_[s.index] = base_of(s.index);
      if (auto name = computed_name(s.op)) computed_.insert(to_lower(*name));
      auto src = source_of(s.op);
      if (!src) continue;
      const SubSchemaTable* t = schema_.find(src->first);
      if (!t) {
        error(s.index, "UnknownTable", "table '" + src->first + "' is not in the selected schema");
        continue;
      }
      auto& scope = scopes_[block_[s.index]];
      scope.tables.push_back(t);
      if (src->second) {
        const auto key = to_lower(*src->second);
        if (scope.aliases.contains(key)) {
          error(s.index, "AliasRedefined", "alias '" + *src->second + "' is already defined in this query block");
        } else {
          scope.aliases[key] = t;
        }
        all_aliases_.emplace(key, t);
      }
    }
  }

  const SubSchemaTable* resolve_qualifier(int block, const std::string& q) const {
    const auto key = to_lower(q);
    if (auto it = scopes_.find(block); it != scopes_.end()) {
      if (auto a = it->second.aliases.find(key); a != it->second.aliases.end()) return a->second;
    }
    if (auto a = all_aliases_.find(key); a != all_aliases_.end()) return a->second;
    return schema_.find(q);
  }

  void check_column(int step, const Expr& e) {
    const int block = block_.at(step);
    if (!e.qualifier.empty()) {
      const SubSchemaTable* t = resolve_qualifier(block, e.qualifier);
      if (!t) {
        error(step, "UnknownAlias", "'" + e.qualifier + "' names no table or alias");
        return;
      }
      if (e.text != "*" && !t->find_column(e.text) && !computed_.contains(to_lower(e.text))) {
        error(step, "UnknownColumn", "table '" + t->name + "' has no column '" + e.text + "'");
      }
      return;
    }
    if (e.text == "*" || computed_.contains(to_lower(e.text))) return;
    auto in_tables = [&](const std::vector<const SubSchemaTable*>& ts) {
      for (const auto* t : ts) {
        if (t->find_column(e.text)) return true;
      }
      return false;
    };
    if (auto it = scopes_.find(block); it != scopes_.end() && in_tables(it->second.tables)) return;
    for (const auto& [b, scope] : scopes_) {
      if (in_tables(scope.tables)) return;  // correlated reference to another block
    }
    error(step, "UnknownColumn", "no table in scope has a column '" + e.text + "'");
  }

  void check_step(const EdlStep& s) {
    for_each_expr(s.op, [&](const Expr& root) {
      walk(root, [&](const Expr& e) {
        if (e.kind == ExprKind::Column) check_column(s.index, e);
      });
    });
    std::visit(overloaded{
                   [&](const SelectColumn& o) {
                     if (o.table_alias && !resolve_qualifier(block_.at(s.index), *o.table_alias)) {
                       error(s.index, "UnknownAlias", "'" + *o.table_alias + "' names no table or alias");
                     }
                   },
                   [&](const Casting& o) {
                     auto type = detail::to_upper(o.new_type);
                     if (auto p = type.find_first_of(" ("); p != std::string::npos) type.resize(p);
                     if (!cast_types().contains(type)) {
                       error(s.index, "InvalidCastType", "cannot cast to '" + o.new_type + "'");
                     }
                   },
                   [&](const Having& o) {
                     int cur = o.input;
                     while (true) {
                       if (std::holds_alternative<GroupBy>(plan_.step(cur).op)) return;
                       auto in = primary_input(plan_.step(cur).op, cur);
                       if (!in) break;
                       cur = *in;
                     }
                     error(s.index, "MissingGroupBy", "having clause over #" + std::to_string(o.input) +
                                                          " has no Group By step upstream");
                   },
                   [&](const ArithmeticCalculation& o) {
                     if (o.operands.size() < 2) {
                       error(s.index, "BadOperandCount", "arithmetic needs at least two operands");
                     }
                   },
                   [&](const DateCalculation& o) {
                     const bool binary = o.operation == DateOp::DayDifference || o.operation == DateOp::DayAddition;
                     if (o.operands.size() != (binary ? 2u : 1u)) {
                       error(s.index, "BadOperandCount", std::string(to_string(o.operation)) + " takes " +
                                                             (binary ? "two operands" : "one operand"));
                     }
                   },
                   [&](const SubstringExtraction& o) {
                     if (o.start < 1 || o.length < 1) {
                       error(s.index, "BadArgument", "substring start and length must be positive");
                     }
                   },
                   [](const auto&) {},
               },
               s.op);
  }

  void check_unused() {
    std::set<int> reached;
    std::vector<int> stack = {plan_.root > 0 ? plan_.root : plan_.steps.back().index};
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      if (cur < 1 || cur > static_cast<int>(plan_.steps.size()) || !reached.insert(cur).second) continue;
      for (int r : plan_.step(cur).refs) stack.push_back(r);
    }
    for (const auto& s : plan_.steps) {
      if (!reached.contains(s.index)) {
        out_.push_back(Diagnostic{s.index, Severity::Warning, "UnusedStep",
                                  "step #" + std::to_string(s.index) + " does not feed the final step", 0});
      }
    }
  }

  struct Scope {
    std::vector<const SubSchemaTable*> tables;
    std::map<std::string, const SubSchemaTable*> aliases;
  };

  const EdlPlan& plan_;
  const SubSchema& schema_;
  std::vector<Diagnostic> out_;
  std::map<int, int> block_;
  std::map<int, Scope> scopes_;
  std::multimap<std::string, const SubSchemaTable*> all_aliases_;
  std::set<std::string> computed_;
};

}  // namespace

std::vector<Diagnostic> validate_plan(const EdlPlan& plan, const SubSchema& schema) {
  return Validator(plan, schema).run();
}

}  // namespace credsql::edl
