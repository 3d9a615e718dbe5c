#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "credsql/edl/edl.hpp"
#include "credsql/error.hpp"
#include "credsql/schema.hpp"

namespace credsql {

struct SqlQuery {
  std::string text;
  std::string dialect = "sqlite";
  int source_plan_root = 0;

  bool operator==(const SqlQuery&) const = default;
};

class UnsupportedShapeError : public Error {
 public:
  UnsupportedShapeError(int step, const std::string& message)
      : Error(ErrorCode::UnsupportedShape, "step #" + std::to_string(step) + ": " + message), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Lowers a plan to one SQLite SELECT statement. Each query block is the
/// chain of steps linked through their row inputs; "#n" references inside
/// conditions become nested subqueries, set operations become compound
/// selects. Throws UnsupportedShapeError naming the blocking step.
SqlQuery compile(const edl::EdlPlan& plan, const SubSchema& schema);

struct CompileOutcome {
  std::optional<SqlQuery> query;
  std::vector<edl::Diagnostic> diagnostics;  // warnings may accompany a query

  bool ok() const { return query.has_value(); }
};

/// validate_plan, then compile; never throws on malformed plans.
CompileOutcome compile_or_explain(const edl::EdlPlan& plan, const SubSchema& schema);
/// Same, starting from EDL text (parse diagnostics are returned as-is).
CompileOutcome compile_or_explain(std::string_view edl_text, const SubSchema& schema);

}  // namespace credsql
