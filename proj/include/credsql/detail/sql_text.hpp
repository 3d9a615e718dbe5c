#pragma once

#include <set>
#include <string>
#include <string_view>

#include "credsql/detail/strings.hpp"

namespace credsql::detail {

// SQLite keywords that cannot appear as bare identifiers (plus a few that
// parse but read badly, e.g. "order", "group").
inline bool is_sql_keyword(std::string_view word) {
  static const std::set<std::string, std::less<>> kw = {
      "abort", "action", "add", "after", "all", "alter", "always", "analyze", "and", "as", "asc", "attach",
      "autoincrement", "before", "begin", "between", "by", "cascade", "case", "cast", "check", "collate", "column",
      "commit", "conflict", "constraint", "create", "cross", "current", "current_date", "current_time",
      "current_timestamp", "database", "default", "deferrable", "deferred", "delete", "desc", "detach", "distinct",
      "do", "drop", "each", "else", "end", "escape", "except", "exclude", "exclusive", "exists", "explain", "fail",
      "filter", "first", "following", "for", "foreign", "from", "full", "generated", "glob", "group", "groups",
      "having", "if", "ignore", "immediate", "in", "index", "indexed", "initially", "inner", "insert", "instead",
      "intersect", "into", "is", "isnull", "join", "key", "last", "left", "like", "limit", "match", "materialized",
      "natural", "no", "not", "nothing", "notnull", "null", "nulls", "of", "offset", "on", "or", "order", "others",
      "outer", "over", "partition", "plan", "pragma", "preceding", "primary", "query", "raise", "range",
      "recursive", "references", "regexp", "reindex", "release", "rename", "replace", "restrict", "returning",
      "right", "rollback", "row", "rows", "savepoint", "select", "set", "table", "temp", "temporary", "then",
      "ties", "to", "transaction", "trigger", "unbounded", "union", "unique", "update", "using", "vacuum",
      "values", "view", "virtual", "when", "where", "window", "with", "without"};
  return kw.contains(to_lower(word));
}

inline std::string quote_identifier(std::string_view name) {
  if (is_simple_identifier(name) && !is_sql_keyword(name)) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    out += c;
    if (c == '"') out += '"';
  }
  return out + "\"";
}

inline std::string quote_string(std::string_view value) {
  std::string out = "'";
  for (char c : value) {
    out += c;
    if (c == '\'') out += '\'';
  }
  return out + "'";
}

}  // namespace credsql::detail
