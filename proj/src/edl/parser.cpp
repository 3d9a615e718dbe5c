#include <array>
#include <functional>
#include <map>
#include <regex>

#include "credsql/detail/strings.hpp"
#include "credsql/edl/edl.hpp"

namespace credsql::edl {

namespace {

using detail::iequals;
using detail::to_lower;
using detail::trim;

enum Tpl {
  kScan,
  kSubquerySelect,
  kJoin,
  kReserve,
  kGroup,
  kHaving,
  kSort,
  kLimit,
  kSelect,
  kSetOp,
  kArith,
  kDate,
  kCase,
  kSubstr,
  kCast,
  kRank,
  kTplCount
};

// Surface forms, as shown to users and models.
constexpr std::array<std::string_view, kTplCount> kTemplateText = {
    "Retrieve all rows from the [table name] table aliased as [alias].",
    "Retrieve all rows from the [table name] table in a subquery and select the [column name] column.",
    "Join the [table name] table aliased as [alias] on the condition that [condition].",
    "Reserve rows of [#step_number] where [filter condition].",
    "Group [#step_number] by the [column name] column.",
    "Apply Having Clause: Reserve the grouped rows of [#step_number] where [condition].",
    "Order [#step_number] by the [column name] column in [order type] order.",
    "Limit [#step_number] to the top [number] record(s).",
    "Select the [column name] column from the [table alias] table in [#step_number].",
    "Apply [set operation] operation: Exclude/Include the results in [query number] from/in the results in "
    "[query number].",
    "Compute [column name] as the [arithmetic operation] of [column names or values].",
    "Compute [column name] as the [date operation] of [column names or values].",
    "Compute [column name] as a case statement where [condition], then [result], else [default result].",
    "Extract substring from [column name] starting at position [start] for [length] characters as [column name].",
    "Cast [column name] as [new data type].",
    "Compute the rank of [column name] ordered by [order column] in [order type] order using the RANK( ) window "
    "function.",
};

// Template index for each operator variant (ScanTable .. Ranking).
constexpr std::array<int, kOperatorCount> kVariantTemplate = {kScan,  kJoin,  kReserve, kSubquerySelect,
                                                              kGroup, kHaving, kSort,   kLimit,
                                                              kSelect, kSetOp, kArith,  kDate,
                                                              kCase,  kSubstr, kCast,   kRank};

struct SlotError {
  std::string message;
};

// Builds an anchored, case-insensitive regex: literal spaces become \s+, and
// {NAME} {COL} {REF} {QREF} {ORDER} expand to capture groups.
std::regex build(std::string_view pattern) {
  std::string out = "^";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const char c = pattern[i];
    if (c == ' ') {
      out += "\\s+";
    } else if (c == '{') {
      const auto end = pattern.find('}', i);
      const auto key = pattern.substr(i + 1, end - i - 1);
      if (key == "NAME") out += R"((\[[^\]]+\]|[A-Za-z_][\w.$-]*))";
      else if (key == "COL") out += R"((\[.+?\]|[^\s\[\]]+))";
      else if (key == "REF") out += R"((?:the\s+results?\s+of\s+)?\[?#\s*(\d+)\]?)";
      else if (key == "QREF") out += R"((?:query\s+)?\[?(?:query\s+)?(?:#\s*)?(\d+)\]?)";
      else if (key == "ORDER") out += "(ascending|descending|asc|desc)";
      i = end;
    } else {
      out += c;
    }
  }
  out += "$";
  return std::regex(out, std::regex::icase | std::regex::ECMAScript);
}

std::string unbracket(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') return std::string(trim(s.substr(1, s.size() - 2)));
  return std::string(s);
}

// True when `s` is exactly one balanced [...] group.
bool single_bracket_group(std::string_view s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    else if (s[i] == ']' && --depth == 0 && i + 1 != s.size()) return false;
  }
  return depth == 0;
}

// Splits at top-level commas and, optionally, the word "and".
std::vector<std::string> split_top(std::string_view s, bool on_and) {
  std::vector<std::string> out;
  int depth = 0;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"') quote = c;
    else if (c == '[' || c == '(') ++depth;
    else if (c == ']' || c == ')') --depth;
    else if (depth == 0 && c == ',') {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    } else if (depth == 0 && on_and && (c == 'a' || c == 'A') && i > 0 && detail::is_space(s[i - 1]) &&
               i + 3 < s.size() && iequals(s.substr(i, 3), "and") && detail::is_space(s[i + 3])) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 3;
      i += 2;
    }
  }
  out.emplace_back(s.substr(start));
  std::vector<std::string> cleaned;
  for (auto& piece : out) {
    auto t = trim(piece);
    if (t.empty()) continue;  // ", and" leaves an empty piece
    if (detail::istarts_with(t, "the ")) t = trim(t.substr(4));
    cleaned.emplace_back(t);
  }
  return cleaned;
}

Expr slot_expr(std::string_view piece) {
  piece = trim(piece);
  if (single_bracket_group(piece)) return parse_column_slot(piece.substr(1, piece.size() - 2));
  std::string err;
  if (auto e = try_parse_expression(piece, &err)) return *e;
  throw SlotError{"cannot read '" + std::string(piece) + "': " + err};
}

// "[a], [b] and [c]" or "[a, b]" -> expressions.
std::vector<Expr> slot_list(std::string_view text) {
  std::vector<Expr> out;
  auto pieces = split_top(text, true);
  if (pieces.size() == 1 && single_bracket_group(pieces[0])) {
    const auto inner = std::string_view(pieces[0]).substr(1, pieces[0].size() - 2);
    auto parts = split_top(inner, false);
    if (parts.size() > 1) {
      for (const auto& p : parts) out.push_back(parse_column_slot(p));
      return out;
    }
  }
  for (const auto& p : pieces) out.push_back(slot_expr(p));
  if (out.empty()) throw SlotError{"empty column list"};
  return out;
}

Expr condition(std::string_view text) {
  std::string err;
  if (auto e = try_parse_expression(trim(text), &err)) return *e;
  throw SlotError{"cannot read condition '" + std::string(trim(text)) + "': " + err};
}

std::optional<std::string> opt_name(const std::ssub_match& m) {
  if (!m.matched) return std::nullopt;
  return unbracket(m.str());
}

SortOrder order_of(const std::string& word) {
  return detail::istarts_with(word, "desc") ? SortOrder::Descending : SortOrder::Ascending;
}

long number_of(const std::string& digits) {
  try {
    return std::stol(digits);
  } catch (const std::exception&) {
    throw SlotError{"number out of range: " + digits};
  }
}

using Builder = std::function<EdlOperator(const std::smatch&, bool as_subquery)>;

struct Template {
  Tpl id;
  std::regex re;
  Builder make;
};

const std::vector<Template>& templates() {
  static const std::vector<Template> all = [] {
    std::vector<Template> t;
    t.push_back({kScan, build("retrieve all rows from (?:the )?{NAME} table(?: aliased as {NAME})?"),
                 [](const std::smatch& m, bool sub) -> EdlOperator {
                   if (sub) return Subquery{unbracket(m[1].str()), opt_name(m[2]), std::nullopt};
                   return ScanTable{unbracket(m[1].str()), opt_name(m[2])};
                 }});
    t.push_back({kSubquerySelect,
                 build("retrieve all rows from (?:the )?{NAME} table(?: aliased as {NAME})? in a subquery(?: "
                       "aliased as {NAME})? and select (?:the )?{COL} column"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   auto alias = m[2].matched ? opt_name(m[2]) : opt_name(m[3]);
                   return Subquery{unbracket(m[1].str()), alias, slot_expr(m[4].str())};
                 }});
    t.push_back({kJoin,
                 build("join (?:the )?{NAME} table(?: aliased as {NAME})? on (?:the condition (?:that )?)?(.+)"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return Join{unbracket(m[1].str()), opt_name(m[2]), condition(m[3].str())};
                 }});
    t.push_back({kReserve, build("reserve rows of {REF} where (.+)"), [](const std::smatch& m, bool) -> EdlOperator {
                   return ReserveRows{static_cast<int>(number_of(m[1].str())), condition(m[2].str())};
                 }});
    t.push_back({kGroup, build(R"(group {REF} by (.+?) columns?(?:\(s\))?)"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return GroupBy{static_cast<int>(number_of(m[1].str())), slot_list(m[2].str())};
                 }});
    t.push_back({kHaving, build(R"((?:apply having clause\s*:\s*)?reserve the grouped rows of {REF} where (.+))"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return Having{static_cast<int>(number_of(m[1].str())), condition(m[2].str())};
                 }});
    t.push_back({kSort, build("(?:order|sort) {REF} by (?:the )?{COL} column in {ORDER} order"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return Sort{static_cast<int>(number_of(m[1].str())), slot_expr(m[2].str()), order_of(m[3].str())};
                 }});
    t.push_back({kLimit, build(R"(limit {REF} to (?:the )?top \[?(\d+)\]? record(?:s|\(s\))?)"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   const long n = number_of(m[2].str());
                   if (n < 1) throw SlotError{"limit count must be at least 1"};
                   return Limit{static_cast<int>(number_of(m[1].str())), n};
                 }});
    t.push_back({kSelect,
                 build(R"(select (?:the )?(distinct )?(.+?) columns?(?:\(s\))?(?: from (?:the )?{NAME} table)? )"
                       R"((?:in|from|of) {REF})"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return SelectColumn{static_cast<int>(number_of(m[4].str())), slot_list(m[2].str()),
                                       opt_name(m[3]), m[1].matched};
                 }});
    t.push_back({kSetOp,
                 build(R"(apply (?:the )?\[?(union|intersect|except)\]? operation\s*:\s*(exclude|include) the )"
                       R"(results? (?:in|of) {QREF} (?:from|in) the results? (?:in|of) {QREF})"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   const auto kind = to_lower(m[1].str());
                   SetOperation op;
                   op.kind = kind == "union" ? SetKind::Union : kind == "intersect" ? SetKind::Intersect : SetKind::Except;
                   op.right_query = static_cast<int>(number_of(m[3].str()));
                   op.left_query = static_cast<int>(number_of(m[4].str()));
                   return op;
                 }});
    t.push_back({kArith,
                 build("compute {NAME} as the "
                       "(addition|sum|subtraction|difference|multiplication|product|division|quotient|ratio) of (.+)"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   const auto w = to_lower(m[2].str());
                   ArithmeticOp op = ArithmeticOp::Addition;
                   if (w == "subtraction" || w == "difference") op = ArithmeticOp::Subtraction;
                   else if (w == "multiplication" || w == "product") op = ArithmeticOp::Multiplication;
                   else if (w == "division" || w == "quotient" || w == "ratio") op = ArithmeticOp::Division;
                   return ArithmeticCalculation{unbracket(m[1].str()), op, slot_list(m[3].str())};
                 }});
    t.push_back({kDate, build("compute {NAME} as the (day difference|day addition|year|month|day) of (.+)"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   const auto w = to_lower(m[2].str());
                   DateOp op = DateOp::Year;
                   if (w == "month") op = DateOp::Month;
                   else if (w == "day") op = DateOp::Day;
                   else if (w.find("difference") != std::string::npos) op = DateOp::DayDifference;
                   else if (w.find("addition") != std::string::npos) op = DateOp::DayAddition;
                   return DateCalculation{unbracket(m[1].str()), op, slot_list(m[3].str())};
                 }});
    t.push_back({kCase, build("compute {NAME} as a case statement where (.+?),? then (.+?),? else (.+)"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return CaseStatement{unbracket(m[1].str()), condition(m[2].str()), condition(m[3].str()),
                                        condition(m[4].str())};
                 }});
    t.push_back({kSubstr,
                 build(R"(extract (?:a )?substring from {COL} starting at position \[?(\d+)\]? for \[?(\d+)\]? )"
                       "characters? as {NAME}"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return SubstringExtraction{slot_expr(m[1].str()), number_of(m[2].str()), number_of(m[3].str()),
                                              unbracket(m[4].str())};
                 }});
    t.push_back({kCast,
                 build(R"(cast {COL} as (?:an? )?\[?([A-Za-z][A-Za-z ]*?(?:\(\s*\d+(?:\s*,\s*\d+)?\s*\))?)\]?)"
                       "(?: type)?"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return Casting{slot_expr(m[1].str()), std::string(trim(m[2].str()))};
                 }});
    t.push_back({kRank,
                 build(R"(compute the rank of {COL} ordered by {COL} in {ORDER} order(?: using the rank\s*\(\s*\) )"
                       "window function)?"),
                 [](const std::smatch& m, bool) -> EdlOperator {
                   return Ranking{slot_expr(m[1].str()), slot_expr(m[2].str()), order_of(m[3].str())};
                 }});
    return t;
  }();
  return all;
}

// Operator labels that may precede the template ("Scan Table: ...").
const std::map<std::string, std::vector<Tpl>>& labels() {
  static const std::map<std::string, std::vector<Tpl>> m = {
      {"scan table", {kScan}},
      {"scan", {kScan}},
      {"table scan", {kScan}},
      {"subquery", {kScan, kSubquerySelect}},
      {"join", {kJoin}},
      {"reserve rows", {kReserve}},
      {"filter", {kReserve}},
      {"group by", {kGroup}},
      {"having clause", {kHaving}},
      {"having", {kHaving}},
      {"apply having clause", {kHaving}},
      {"sort", {kSort}},
      {"order by", {kSort}},
      {"limit", {kLimit}},
      {"select column", {kSelect}},
      {"select", {kSelect}},
      {"set operation", {kSetOp}},
      {"arithmetic calculation", {kArith}},
      {"date calculation", {kDate}},
      {"case statement", {kCase}},
      {"substring extraction", {kSubstr}},
      {"casting", {kCast}},
      {"cast", {kCast}},
      {"ranking", {kRank}},
      {"rank", {kRank}},
  };
  return m;
}

std::string normalize_label(std::string_view s) {
  std::string out;
  for (char c : trim(s)) {
    if (detail::is_space(c)) {
      if (!out.empty() && out.back() != ' ') out += ' ';
    } else {
      out += detail::ascii_lower(c);
    }
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (detail::ascii_lower(a[i - 1]) == detail::ascii_lower(b[j - 1]) ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string_view first_word(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && detail::is_alpha(s[n])) ++n;
  return s.substr(0, n);
}

// Edit distance to the surface form, among templates sharing the leading verb
// when there are any.
Tpl nearest(std::string_view body, std::vector<Tpl> among) {
  std::vector<Tpl> same_verb;
  for (Tpl t : among) {
    if (iequals(first_word(kTemplateText[t]), first_word(body))) same_verb.push_back(t);
  }
  if (!same_verb.empty()) among = same_verb;
  Tpl best = among.front();
  std::size_t best_d = SIZE_MAX;
  for (Tpl t : among) {
    const auto d = edit_distance(body, kTemplateText[t]);
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  return best;
}

bool starts_with_template_verb(std::string_view body) {
  static const std::array<std::string_view, 12> verbs = {"retrieve", "join",    "reserve", "group",
                                                         "apply",    "order",   "sort",    "limit",
                                                         "select",   "compute", "extract", "cast"};
  const auto word = first_word(body);
  for (auto v : verbs) {
    if (iequals(word, v)) return true;
  }
  return false;
}

std::vector<Tpl> all_templates() {
  std::vector<Tpl> out;
  for (int i = 0; i < kTplCount; ++i) out.push_back(static_cast<Tpl>(i));
  return out;
}

struct LineOutcome {
  std::optional<EdlOperator> op;
  std::optional<Diagnostic> diag;
};

Diagnostic error_at(int step, int line, std::string code, std::string message) {
  return Diagnostic{step, Severity::Error, std::move(code), std::move(message), line};
}

LineOutcome parse_body(std::string body, int index, int line) {
  body = std::string(trim(body));
  if (!body.empty() && body.back() == '.') body.pop_back();
  body = std::string(trim(body));
  if (body.empty()) return {std::nullopt, error_at(index, line, "TemplateMismatch", "step has no operator text")};

  std::vector<Tpl> allowed = all_templates();
  bool labelled = false;
  bool as_subquery = false;
  static const std::regex label_re(R"(^([A-Za-z][A-Za-z ]{0,40}?)\s*:\s*(.*)$)");
  std::smatch lm;
  std::string after_label;
  if (std::regex_match(body, lm, label_re)) {
    const auto label = normalize_label(lm[1].str());
    if (auto it = labels().find(label); it != labels().end()) {
      allowed = it->second;
      labelled = true;
      as_subquery = label == "subquery";
      after_label = lm[2].str();
      // "Apply Having Clause: Reserve the grouped rows ..." keeps its prefix
      if (label != "apply having clause") body = after_label;
    }
  }

  for (Tpl id : allowed) {
    const auto& t = templates()[id];
    std::smatch m;
    if (!std::regex_match(body, m, t.re)) continue;
    try {
      return {t.make(m, as_subquery), std::nullopt};
    } catch (const SlotError& e) {
      return {std::nullopt, error_at(index, line, "TemplateMismatch", e.message)};
    }
  }

  if (!labelled && lm.size() > 0 && lm[0].matched && !starts_with_template_verb(body)) {
    return {std::nullopt, error_at(index, line, "UnknownOperator",
                                   "unknown operator '" + std::string(trim(lm[1].str())) + "'")};
  }
  if (!labelled && !starts_with_template_verb(body)) {
    return {std::nullopt, error_at(index, line, "UnknownOperator", "no operator template starts like '" + body + "'")};
  }
  const Tpl near = nearest(body, allowed);
  return {std::nullopt,
          error_at(index, line, "TemplateMismatch",
                   "text does not fit any operator template; nearest is \"" + std::string(kTemplateText[near]) + "\"")};
}

}  // namespace

std::string_view template_text(std::size_t variant_index) { return kTemplateText.at(kVariantTemplate.at(variant_index)); }

ParseResult parse_edl_text(std::string_view text) {
  ParseResult result;
  static const std::regex head_re(R"(^#\s*(\d+)\s*[.:)]?\s*(.*)$)");
  int expected = 1;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(trim(text.substr(pos, nl - pos)));
    pos = nl + 1;
    ++line_no;
    if (line.empty()) continue;

    std::smatch hm;
    if (!std::regex_match(line, hm, head_re)) {
      result.diagnostics.push_back(
          error_at(0, line_no, "MissingStepHead", "line does not start with a step number like \"#1.\""));
      continue;
    }
    int index = 0;
    try {
      index = std::stoi(hm[1].str());
    } catch (const std::exception&) {
      index = -1;
    }
    if (index != expected) {
      result.diagnostics.push_back(error_at(index, line_no, "NonContiguousNumbering",
                                            "expected step #" + std::to_string(expected) + ", found #" +
                                                hm[1].str()));
      expected = index > 0 ? index + 1 : expected + 1;
      continue;
    }
    expected = index + 1;

    auto outcome = parse_body(hm[2].str(), index, line_no);
    if (outcome.diag) {
      result.diagnostics.push_back(*outcome.diag);
      continue;
    }
    EdlStep step = make_step(index, std::move(*outcome.op));
    for (int r : step.refs) {
      if (r < 1 || r >= index) {
        result.diagnostics.push_back(error_at(index, line_no, "DanglingReference",
                                              "step #" + std::to_string(index) + " refers to #" + std::to_string(r) +
                                                  ", which is not an earlier step"));
        break;
      }
    }
    result.plan.steps.push_back(std::move(step));
  }
  if (result.plan.steps.empty() && result.diagnostics.empty()) {
    result.diagnostics.push_back(error_at(0, 0, "EmptyPlan", "no steps found"));
  }
  if (!result.plan.steps.empty()) result.plan.root = result.plan.steps.back().index;
  return result;
}

EdlPlan parse_edl(std::string_view text) {
  auto r = parse_edl_text(text);
  if (!r.ok()) throw EdlParseError(std::move(r.diagnostics));
  return std::move(r.plan);
}

}  // namespace credsql::edl
