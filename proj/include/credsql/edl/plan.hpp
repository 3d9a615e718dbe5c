#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "credsql/edl/expr.hpp"

namespace credsql::edl {

enum class SortOrder { Ascending, Descending };
enum class SetKind { Union, Intersect, Except };
enum class ArithmeticOp { Addition, Subtraction, Multiplication, Division };
enum class DateOp { Year, Month, Day, DayDifference, DayAddition };

// One struct per operator. Steps referenced through "[#n]" slots are stored
// as `input`; Join and the Compute-style operators implicitly consume the
// preceding step and carry no input field.

struct ScanTable {
  std::string table;
  std::optional<std::string> alias;
  bool operator==(const ScanTable&) const = default;
};

struct Join {
  std::string table;
  std::optional<std::string> alias;
  Expr condition;
  bool operator==(const Join&) const = default;
};

struct ReserveRows {
  int input = 0;
  Expr condition;
  bool operator==(const ReserveRows&) const = default;
};

/// Leaf of a nested query block. Without `select_column` it opens the block
/// ("Subquery: Retrieve all rows from the [T] table aliased as A."); with it
/// the block is complete on its own.
struct Subquery {
  std::string table;
  std::optional<std::string> alias;
  std::optional<Expr> select_column;
  bool operator==(const Subquery&) const = default;
};

struct GroupBy {
  int input = 0;
  std::vector<Expr> columns;
  bool operator==(const GroupBy&) const = default;
};

struct Having {
  int input = 0;
  Expr condition;
  bool operator==(const Having&) const = default;
};

struct Sort {
  int input = 0;
  Expr column;
  SortOrder order = SortOrder::Ascending;
  bool operator==(const Sort&) const = default;
};

struct Limit {
  int input = 0;
  long count = 1;
  bool operator==(const Limit&) const = default;
};

struct SelectColumn {
  int input = 0;
  std::vector<Expr> columns;
  std::optional<std::string> table_alias;
  bool distinct = false;
  bool operator==(const SelectColumn&) const = default;
};

struct SetOperation {
  SetKind kind = SetKind::Union;
  int left_query = 0;
  int right_query = 0;
  bool operator==(const SetOperation&) const = default;
};

struct ArithmeticCalculation {
  std::string output_column;
  ArithmeticOp operation = ArithmeticOp::Addition;
  std::vector<Expr> operands;
  bool operator==(const ArithmeticCalculation&) const = default;
};

struct DateCalculation {
  std::string output_column;
  DateOp operation = DateOp::Year;
  std::vector<Expr> operands;
  bool operator==(const DateCalculation&) const = default;
};

struct CaseStatement {
  std::string output_column;
  Expr condition;
  Expr then_result;
  Expr else_result;
  bool operator==(const CaseStatement&) const = default;
};

struct SubstringExtraction {
  Expr source_column;
  long start = 1;
  long length = 1;
  std::string output_column;
  bool operator==(const SubstringExtraction&) const = default;
};

struct Casting {
  Expr column;
  std::string new_type;
  bool operator==(const Casting&) const = default;
};

/// RANK() OVER (ORDER BY order_column ...), exposed as "<column>_rank".
struct Ranking {
  Expr column;
  Expr order_column;
  SortOrder order = SortOrder::Ascending;
  bool operator==(const Ranking&) const = default;
};

using EdlOperator = std::variant<ScanTable, Join, ReserveRows, Subquery, GroupBy, Having, Sort, Limit, SelectColumn,
                                 SetOperation, ArithmeticCalculation, DateCalculation, CaseStatement,
                                 SubstringExtraction, Casting, Ranking>;

inline constexpr std::size_t kOperatorCount = std::variant_size_v<EdlOperator>;

/// Display name of the operator ("Scan Table", "Group By", ...).
std::string_view operator_name(const EdlOperator& op);
std::string_view operator_name(std::size_t variant_index);

struct EdlStep {
  int index = 0;
  EdlOperator op;
  std::set<int> refs;
  bool operator==(const EdlStep&) const = default;
};

struct EdlPlan {
  std::vector<EdlStep> steps;
  int root = 0;
  bool operator==(const EdlPlan&) const = default;

  const EdlStep& step(int index) const { return steps.at(static_cast<std::size_t>(index - 1)); }
};

enum class Severity { Error, Warning };

struct Diagnostic {
  int step_index = 0;
  Severity severity = Severity::Error;
  std::string code;
  std::string message;
  int line = 0;
  bool operator==(const Diagnostic&) const = default;
};

std::string format_diagnostic(const Diagnostic& d);
std::string format_diagnostics(const std::vector<Diagnostic>& ds);
bool has_errors(const std::vector<Diagnostic>& ds);

/// Step this operator consumes row-wise: its "[#n]" input, or index-1 for
/// Join and the Compute-style operators. Leaves and set operations: none.
std::optional<int> primary_input(const EdlOperator& op, int index);

/// Every step number `op` depends on: primary input, set operands, and
/// step references inside its expressions.
std::set<int> compute_refs(const EdlOperator& op, int index);

/// Builds an EdlStep with refs filled in.
EdlStep make_step(int index, EdlOperator op);

std::string_view to_string(SortOrder o);
std::string_view to_string(SetKind k);
std::string_view to_string(ArithmeticOp o);
std::string_view to_string(DateOp o);

}  // namespace credsql::edl
