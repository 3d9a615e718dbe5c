#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace credsql::edl {

enum class ExprKind {
  Column,   // qualifier?, text = column name
  Number,   // text = literal lexeme
  String,   // text = unescaped value
  Null,
  Star,
  Call,     // text = function name, args, distinct
  Binary,   // op in {Add, Sub, Mul, Div}, args = {lhs, rhs}
  Compare,  // op in {Eq .. Ge}, args = {lhs, rhs}
  Logical,  // op in {And, Or}, args = {lhs, rhs}
  Not,      // args = {operand}
  In,       // args = {lhs, items...} or step > 0 for "the result of #n"
  IsNull,   // args = {operand}, negated
  Between,  // args = {operand, low, high}, negated
  Like,     // args = {operand, pattern}, negated
  StepRef,  // step: scalar result of another step
};

enum class Op { None, Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };

/// Condition / value expression carried by EDL slots. A plain value type:
/// copyable, comparable, recursive through `args`.
struct Expr {
  ExprKind kind = ExprKind::Null;
  Op op = Op::None;
  std::string qualifier;
  std::string text;
  bool negated = false;
  bool distinct = false;
  int step = 0;
  std::vector<Expr> args;

  bool operator==(const Expr&) const = default;

  static Expr column(std::string name, std::string qualifier = {});
  static Expr number(std::string lexeme);
  static Expr string(std::string value);
  static Expr null();
  static Expr star();
  static Expr call(std::string name, std::vector<Expr> args, bool distinct = false);
  static Expr binary(Op op, Expr lhs, Expr rhs);
  static Expr compare(Op op, Expr lhs, Expr rhs);
  static Expr logical(Op op, Expr lhs, Expr rhs);
  static Expr negate(Expr operand);
  static Expr in_step(Expr lhs, int step, bool negated);
  static Expr in_list(Expr lhs, std::vector<Expr> items, bool negated);
  static Expr is_null(Expr operand, bool negated);
  static Expr between(Expr operand, Expr low, Expr high, bool negated);
  static Expr like(Expr operand, Expr pattern, bool negated);
  static Expr step_ref(int step);
};

/// Thrown by the expression parser; the message says what was expected.
struct ExprSyntaxError {
  std::string message;
};

/// Parses a condition or value in the EDL expression grammar: comparisons in
/// symbols or words ("equals", "is greater than", "is not in the result of
/// #5"), AND/OR/NOT, arithmetic, function calls, literals, and column
/// references written bare, in [brackets], or as "the [c] in table T".
Expr parse_expression(std::string_view text);
std::optional<Expr> try_parse_expression(std::string_view text, std::string* error = nullptr);

/// Parses the content of a column slot. Falls back to a single raw column
/// name when the content isn't an expression ("Free Meal Count (K-12)").
Expr parse_column_slot(std::string_view text);

std::string render_expression(const Expr& e);
/// Content for a bracketed column slot; parse_column_slot inverts it.
std::string render_column_slot(const Expr& e);

/// Visits `e` and every sub-expression, pre-order.
template <typename F>
void walk(const Expr& e, F&& f) {
  f(e);
  for (const auto& a : e.args) walk(a, f);
}

/// Step numbers referenced anywhere inside `e`.
std::vector<int> step_refs(const Expr& e);

bool is_reserved_word(std::string_view word);

}  // namespace credsql::edl
