#include "credsql/compiler.hpp"

#include <algorithm>
#include <map>

#include "credsql/detail/sql_text.hpp"
#include "credsql/detail/strings.hpp"

namespace credsql {

using namespace edl;
using detail::quote_identifier;
using detail::to_lower;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

int sql_precedence(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Logical: return e.op == Op::Or ? 1 : 2;
    case ExprKind::Not: return 3;
    case ExprKind::Compare:
    case ExprKind::In:
    case ExprKind::IsNull:
    case ExprKind::Between:
    case ExprKind::Like: return 4;
    case ExprKind::Binary: return (e.op == Op::Add || e.op == Op::Sub) ? 5 : 6;
    default: return 7;
  }
}

const char* compare_sql(Op op) {
  switch (op) {
    case Op::Eq: return " = ";
    case Op::Ne: return " != ";
    case Op::Lt: return " < ";
    case Op::Le: return " <= ";
    case Op::Gt: return " > ";
    case Op::Ge: return " >= ";
    default: return " = ";
  }
}

const char* binary_sql(Op op) {
  switch (op) {
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    default: return " / ";
  }
}

bool is_compute(const EdlOperator& op) {
  return std::holds_alternative<ArithmeticCalculation>(op) || std::holds_alternative<DateCalculation>(op) ||
         std::holds_alternative<CaseStatement>(op) || std::holds_alternative<SubstringExtraction>(op) ||
         std::holds_alternative<Casting>(op) || std::holds_alternative<Ranking>(op);
}

struct QuerySql {
  std::string sql;
  bool compound = false;
  bool ordered_or_limited = false;
};

class Compiler {
 public:
  Compiler(const EdlPlan& plan, const SubSchema& schema) : plan_(plan), schema_(schema) {}

  QuerySql query(int step) {
    std::vector<int> chain;
    for (std::optional<int> cur = step; cur; cur = primary_input(plan_.step(*cur).op, *cur)) chain.push_back(*cur);
    std::reverse(chain.begin(), chain.end());

    Block b;
    const EdlStep& base = plan_.step(chain.front());
    std::size_t next = 1;
    if (const auto* s = std::get_if<ScanTable>(&base.op)) {
      add_source(b, s->table, s->alias);
    } else if (const auto* s = std::get_if<Subquery>(&base.op)) {
      add_source(b, s->table, s->alias);
      if (s->select_column) b.items.push_back(plain_item(b, *s->select_column, std::nullopt));
    } else if (const auto* s = std::get_if<SetOperation>(&base.op)) {
      const std::string compound = compound_sql(*s);
      bool only_order = true;
      for (std::size_t i = 1; i < chain.size(); ++i) {
        const auto& op = plan_.step(chain[i]).op;
        if (!std::holds_alternative<Sort>(op) && !std::holds_alternative<Limit>(op)) only_order = false;
      }
      if (only_order) {
        for (; next < chain.size(); ++next) apply(b, plan_.step(chain[next]));
        QuerySql out{compound + tail(b), true, !b.order_by.empty() || b.limit.has_value()};
        return out;
      }
      b.from.push_back(Source{"(" + compound + ")", "", ""});
    } else {
      throw UnsupportedShapeError(base.index, std::string(operator_name(base.op)) +
                                                  " cannot start a query block; it needs a table scan");
    }
    for (; next < chain.size(); ++next) apply(b, plan_.step(chain[next]));
    return QuerySql{render(b), false, !b.order_by.empty() || b.limit.has_value()};
  }

 private:
  struct Source {
    std::string sql;
    std::string alias;
    std::string on;
  };
  struct Item {
    std::string match;  // SQL of the expression before any cast was applied
    std::string sql;
    std::string alias;
    std::string column;  // bare column name for plain column items
  };
  struct Block {
    std::vector<Source> from;
    std::vector<std::string> where, group_by, having, order_by;
    std::optional<long> limit;
    std::vector<Item> items;
    bool distinct = false;
    bool grouped = false;
    std::map<std::string, std::string> alias_of;         // lower table name -> alias
    std::map<std::string, std::string> computed;         // lower output name -> SQL
    std::map<std::string, std::string> casts;            // source SQL -> CAST(...)
  };

  std::string table_sql(const std::string& name) const {
    if (const auto* t = schema_.find(name)) return quote_identifier(t->name);
    return quote_identifier(name);
  }

  void add_source(Block& b, const std::string& table, const std::optional<std::string>& alias, std::string on = {}) {
    Source s{table_sql(table), alias.value_or(""), std::move(on)};
    if (alias) {
      b.alias_of[to_lower(table)] = *alias;
      if (const auto* t = schema_.find(table)) {
        b.alias_of[to_lower(t->name)] = *alias;
        b.alias_of[to_lower(t->union_name)] = *alias;
      }
    }
    b.from.push_back(std::move(s));
  }

  std::string qualifier_sql(const Block& b, const std::string& q) const {
    if (auto it = b.alias_of.find(to_lower(q)); it != b.alias_of.end()) return quote_identifier(it->second);
    if (const auto* t = schema_.find(q)) return quote_identifier(t->name);
    return quote_identifier(q);
  }

  std::string child(const Block& b, const Expr& e, int min_prec) {
    auto s = expr(b, e);
    return sql_precedence(e) < min_prec ? "(" + s + ")" : s;
  }

  std::string subquery(int step) { return "(" + query(step).sql + ")"; }

  std::string expr(const Block& b, const Expr& e) {
    switch (e.kind) {
      case ExprKind::Column: {
        const std::string name = e.text == "*" ? "*" : quote_identifier(e.text);
        if (e.qualifier.empty()) return name;
        return qualifier_sql(b, e.qualifier) + "." + name;
      }
      case ExprKind::Number: return e.text;
      case ExprKind::String: return detail::quote_string(e.text);
      case ExprKind::Null: return "NULL";
      case ExprKind::Star: return "*";
      case ExprKind::StepRef: return subquery(e.step);
      case ExprKind::Call: {
        std::string out = e.text + "(";
        if (e.distinct) out += "DISTINCT ";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
          if (i) out += ", ";
          out += expr(b, e.args[i]);
        }
        return out + ")";
      }
      case ExprKind::Binary: {
        const int p = sql_precedence(e);
        return child(b, e.args[0], p) + binary_sql(e.op) + child(b, e.args[1], p + 1);
      }
      case ExprKind::Compare: return child(b, e.args[0], 5) + compare_sql(e.op) + child(b, e.args[1], 5);
      case ExprKind::Logical: {
        const int p = sql_precedence(e);
        return child(b, e.args[0], p) + (e.op == Op::And ? " AND " : " OR ") + child(b, e.args[1], p + 1);
      }
      case ExprKind::Not: return "NOT (" + expr(b, e.args[0]) + ")";
      case ExprKind::In: {
        std::string out = child(b, e.args[0], 5) + (e.negated ? " NOT IN " : " IN ");
        if (e.step > 0) return out + subquery(e.step);
        out += "(";
        for (std::size_t i = 1; i < e.args.size(); ++i) {
          if (i > 1) out += ", ";
          out += expr(b, e.args[i]);
        }
        return out + ")";
      }
      case ExprKind::IsNull: return child(b, e.args[0], 5) + (e.negated ? " IS NOT NULL" : " IS NULL");
      case ExprKind::Between:
        return child(b, e.args[0], 5) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") + child(b, e.args[1], 5) +
               " AND " + child(b, e.args[2], 5);
      case ExprKind::Like:
        return child(b, e.args[0], 5) + (e.negated ? " NOT LIKE " : " LIKE ") + child(b, e.args[1], 5);
    }
    return {};
  }

  // Conjunct for WHERE/HAVING lists joined with AND.
  std::string conjunct(const Block& b, const Expr& e) { return child(b, e, 2); }

  Item plain_item(const Block& b, const Expr& e, const std::optional<std::string>& table_alias) {
    Expr col = e;
    if (col.kind == ExprKind::Column && col.qualifier.empty() && table_alias && b.from.size() > 1) {
      col.qualifier = *table_alias;
    }
    Item it;
    it.match = expr(b, col);
    it.sql = it.match;
    if (e.kind == ExprKind::Column && e.qualifier.empty()) {
      if (auto c = b.computed.find(to_lower(e.text)); c != b.computed.end()) {
        it.sql = c->second;
        it.alias = e.text;
        return it;
      }
    }
    if (e.kind == ExprKind::Column) it.column = e.text;
    if (auto c = b.casts.find(it.match); c != b.casts.end()) it.sql = c->second;
    return it;
  }

  // SQL for a compute operand. Operands that name a projected item take it
  // over (the item leaves the projection); computed names are inlined.
  std::string operand(Block& b, const Expr& e, bool consume) {
    if (e.kind == ExprKind::Column && e.qualifier.empty()) {
      if (auto c = b.computed.find(to_lower(e.text)); c != b.computed.end()) {
        consume_where(b, [&](const Item& it) { return detail::iequals(it.alias, e.text); }, consume);
        return "(" + c->second + ")";
      }
    }
    const std::string s = expr(b, e);
    std::string out = s;
    bool found = false;
    for (const auto& it : b.items) {
      if (it.match == s || (e.kind == ExprKind::Column && e.qualifier.empty() && !it.column.empty() &&
                            detail::iequals(it.column, e.text))) {
        out = it.sql;
        found = true;
        break;
      }
    }
    if (!found) {
      if (auto c = b.casts.find(s); c != b.casts.end()) out = c->second;
    }
    if (found) {
      consume_where(b, [&](const Item& it) {
        return it.match == s || (e.kind == ExprKind::Column && e.qualifier.empty() && !it.column.empty() &&
                                 detail::iequals(it.column, e.text));
      }, consume);
    }
    return sql_precedence(e) < 7 && out == s ? "(" + out + ")" : out;
  }

  template <typename Pred>
  void consume_where(Block& b, Pred pred, bool consume) {
    if (!consume) return;
    for (auto it = b.items.begin(); it != b.items.end(); ++it) {
      if (pred(*it)) {
        b.items.erase(it);
        return;
      }
    }
  }

  void add_computed(Block& b, const std::string& name, std::string sql) {
    b.computed[to_lower(name)] = sql;
    b.items.push_back(Item{"", std::move(sql), name, ""});
  }

  void apply(Block& b, const EdlStep& step) {
    const int idx = step.index;
    if (b.limit && !std::holds_alternative<SelectColumn>(step.op) && !is_compute(step.op)) {
      throw UnsupportedShapeError(idx, std::string(operator_name(step.op)) + " after Limit cannot be expressed");
    }
    std::visit(
        overloaded{
            [&](const Join& o) {
              if (b.grouped) throw UnsupportedShapeError(idx, "Join after Group By cannot be expressed");
              add_source(b, o.table, o.alias);
              b.from.back().on = expr(b, o.condition);
            },
            [&](const ReserveRows& o) { b.where.push_back(conjunct(b, o.condition)); },
            [&](const GroupBy& o) {
              if (b.grouped) throw UnsupportedShapeError(idx, "a query block can only be grouped once");
              b.grouped = true;
              for (const auto& c : o.columns) b.group_by.push_back(expr(b, c));
            },
            [&](const Having& o) {
              if (!b.grouped) throw UnsupportedShapeError(idx, "Having needs a Group By in the same block");
              b.having.push_back(conjunct(b, o.condition));
            },
            [&](const Sort& o) {
              b.order_by.push_back(expr(b, o.column) + (o.order == SortOrder::Descending ? " DESC" : " ASC"));
            },
            [&](const Limit& o) {
              if (b.limit) throw UnsupportedShapeError(idx, "second Limit in one block");
              b.limit = o.count;
            },
            [&](const SelectColumn& o) {
              std::vector<Item> items;
              for (const auto& c : o.columns) items.push_back(plain_item(b, c, o.table_alias));
              b.items = std::move(items);
              b.distinct = o.distinct;
            },
            [&](const ArithmeticCalculation& o) {
              std::string sql;
              for (std::size_t i = 0; i < o.operands.size(); ++i) {
                if (i) sql += binary_sql(o.operation == ArithmeticOp::Addition         ? Op::Add
                                         : o.operation == ArithmeticOp::Subtraction    ? Op::Sub
                                         : o.operation == ArithmeticOp::Multiplication ? Op::Mul
                                                                                        : Op::Div);
                sql += operand(b, o.operands[i], true);
              }
              add_computed(b, o.output_column, sql);
            },
            [&](const DateCalculation& o) {
              if (o.operands.empty()) throw UnsupportedShapeError(idx, "date calculation without operands");
              const std::string a = operand(b, o.operands[0], true);
              std::string sql;
              switch (o.operation) {
                case DateOp::Year: sql = "CAST(strftime('%Y', " + a + ") AS INTEGER)"; break;
                case DateOp::Month: sql = "CAST(strftime('%m', " + a + ") AS INTEGER)"; break;
                case DateOp::Day: sql = "CAST(strftime('%d', " + a + ") AS INTEGER)"; break;
                case DateOp::DayDifference:
                case DateOp::DayAddition: {
                  if (o.operands.size() != 2) throw UnsupportedShapeError(idx, "day arithmetic takes two operands");
                  const auto& rhs = o.operands[1];
                  if (o.operation == DateOp::DayDifference) {
                    sql = "julianday(" + a + ") - julianday(" + operand(b, rhs, true) + ")";
                  } else if (rhs.kind == ExprKind::Number) {
                    sql = "date(" + a + ", '+" + rhs.text + " days')";
                  } else {
                    sql = "date(" + a + ", '+' || " + operand(b, rhs, true) + " || ' days')";
                  }
                  break;
                }
              }
              add_computed(b, o.output_column, sql);
            },
            [&](const CaseStatement& o) {
              add_computed(b, o.output_column,
                           "CASE WHEN " + expr(b, o.condition) + " THEN " + operand(b, o.then_result, false) +
                               " ELSE " + operand(b, o.else_result, false) + " END");
            },
            [&](const SubstringExtraction& o) {
              add_computed(b, o.output_column,
                           "SUBSTR(" + operand(b, o.source_column, true) + ", " + std::to_string(o.start) + ", " +
                               std::to_string(o.length) + ")");
            },
            [&](const Casting& o) {
              const std::string s = expr(b, o.column);
              for (auto& it : b.items) {
                if (it.match == s || (o.column.kind == ExprKind::Column && o.column.qualifier.empty() &&
                                      detail::iequals(it.column, o.column.text))) {
                  it.sql = "CAST(" + it.sql + " AS " + o.new_type + ")";
                  b.casts[s] = it.sql;
                  return;
                }
              }
              const std::string cast = "CAST(" + operand(b, o.column, false) + " AS " + o.new_type + ")";
              b.casts[s] = cast;
              b.items.push_back(Item{s, cast, "", ""});
            },
            [&](const Ranking& o) {
              add_computed(b, o.column.text + "_rank",
                           "RANK() OVER (ORDER BY " + expr(b, o.order_column) +
                               (o.order == SortOrder::Descending ? " DESC)" : " ASC)"));
            },
            [&](const auto&) {
              throw UnsupportedShapeError(idx, std::string(operator_name(step.op)) + " cannot continue a block");
            },
        },
        step.op);
  }

  std::string compound_sql(const SetOperation& s) {
    const auto operand_sql = [&](int step, bool right) {
      QuerySql q = query(step);
      if (q.ordered_or_limited || (right && q.compound)) return "SELECT * FROM (" + q.sql + ")";
      return q.sql;
    };
    const char* kw = s.kind == SetKind::Union ? " UNION " : s.kind == SetKind::Intersect ? " INTERSECT " : " EXCEPT ";
    return operand_sql(s.left_query, false) + kw + operand_sql(s.right_query, true);
  }

  static std::string tail(const Block& b) {
    std::string out;
    if (!b.order_by.empty()) out += " ORDER BY " + detail::join(b.order_by, ", ");
    if (b.limit) out += " LIMIT " + std::to_string(*b.limit);
    return out;
  }

  static std::string render(const Block& b) {
    std::string out = b.distinct ? "SELECT DISTINCT " : "SELECT ";
    if (b.items.empty()) {
      out += "*";
    } else {
      for (std::size_t i = 0; i < b.items.size(); ++i) {
        if (i) out += ", ";
        out += b.items[i].sql;
        if (!b.items[i].alias.empty()) out += " AS " + quote_identifier(b.items[i].alias);
      }
    }
    for (std::size_t i = 0; i < b.from.size(); ++i) {
      const auto& s = b.from[i];
      out += i == 0 ? " FROM " : " JOIN ";
      out += s.sql;
      if (!s.alias.empty()) out += " AS " + quote_identifier(s.alias);
      if (i > 0 && !s.on.empty()) out += " ON " + s.on;
    }
    if (!b.where.empty()) out += " WHERE " + detail::join(b.where, " AND ");
    if (!b.group_by.empty()) out += " GROUP BY " + detail::join(b.group_by, ", ");
    if (!b.having.empty()) out += " HAVING " + detail::join(b.having, " AND ");
    return out + tail(b);
  }

  const EdlPlan& plan_;
  const SubSchema& schema_;
};

void check_structure(const EdlPlan& plan) {
  if (plan.steps.empty()) throw UnsupportedShapeError(0, "empty plan");
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const auto& s = plan.steps[i];
    if (s.index != static_cast<int>(i) + 1) throw UnsupportedShapeError(s.index, "steps are not numbered 1..N");
    for (int r : compute_refs(s.op, s.index)) {
      if (r < 1 || r >= s.index) throw UnsupportedShapeError(s.index, "reference to #" + std::to_string(r));
    }
  }
  if (plan.root < 1 || plan.root > static_cast<int>(plan.steps.size())) {
    throw UnsupportedShapeError(plan.root, "root is not a step of the plan");
  }
}

}  // namespace

SqlQuery compile(const EdlPlan& plan, const SubSchema& schema) {
  check_structure(plan);
  Compiler c(plan, schema);
  return SqlQuery{c.query(plan.root).sql, "sqlite", plan.root};
}

CompileOutcome compile_or_explain(const EdlPlan& plan, const SubSchema& schema) {
  CompileOutcome out;
  out.diagnostics = validate_plan(plan, schema);
  if (has_errors(out.diagnostics)) return out;
  try {
    out.query = compile(plan, schema);
  } catch (const UnsupportedShapeError& e) {
    out.diagnostics.push_back(Diagnostic{e.step(), Severity::Error, "UnsupportedShape", e.what(), 0});
  } catch (const std::exception& e) {
    out.diagnostics.push_back(Diagnostic{0, Severity::Error, "InternalError", e.what(), 0});
  }
  return out;
}

CompileOutcome compile_or_explain(std::string_view edl_text, const SubSchema& schema) {
  auto parsed = parse_edl_text(edl_text);
  if (!parsed.ok()) return CompileOutcome{std::nullopt, std::move(parsed.diagnostics)};
  auto out = compile_or_explain(parsed.plan, schema);
  out.diagnostics.insert(out.diagnostics.begin(), parsed.diagnostics.begin(), parsed.diagnostics.end());
  return out;
}

}  // namespace credsql
