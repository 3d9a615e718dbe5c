#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "credsql/edl/plan.hpp"
#include "credsql/error.hpp"
#include "credsql/schema.hpp"

namespace credsql::edl {

struct ParseResult {
  EdlPlan plan;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

/// Line-oriented parse: one step per line ("#n." head, optional operator
/// label, then the operator's template). Never throws on bad input; every
/// rejected line produces exactly one diagnostic.
ParseResult parse_edl_text(std::string_view text);

class EdlParseError : public Error {
 public:
  explicit EdlParseError(std::vector<Diagnostic> diagnostics)
      : Error(ErrorCode::EdlParse, format_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Throwing form of parse_edl_text.
EdlPlan parse_edl(std::string_view text);

/// Canonical text, one step per line, LF-terminated lines.
std::string render_edl(const EdlPlan& plan);
std::string render_step(const EdlStep& step);

/// The operator's surface template with slots shown as "[...]"; used in
/// TemplateMismatch messages and prompts.
std::string_view template_text(std::size_t variant_index);

/// Schema-aware checks: unknown tables/columns/aliases, alias redefinition,
/// cast targets, Having without Group By upstream, unused steps (warning).
std::vector<Diagnostic> validate_plan(const EdlPlan& plan, const SubSchema& schema);

nlohmann::json to_json(const EdlPlan& plan);
EdlPlan plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Expr& e);
Expr expr_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Diagnostic& d);

}  // namespace credsql::edl
