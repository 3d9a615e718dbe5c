#include "credsql/schema.hpp"

#include <fstream>
#include <set>

#include "credsql/detail/sql_text.hpp"
#include "credsql/detail/strings.hpp"
#include "credsql/error.hpp"

namespace credsql {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& db, const std::string& field, std::size_t index,
                            const std::string& why) {
  throw Error(ErrorCode::MalformedManifest,
              "database '" + db + "', field '" + field + "', index " + std::to_string(index) + ": " + why);
}

std::string synthesize_description(const UnionTable& table) {
  std::vector<std::string> names;
  names.reserve(table.columns.size());
  for (const auto& c : table.columns) names.push_back(c.name);
  return "table " + table.original_name + " with columns " + detail::join(names, ", ");
}

const json& require(const json& db, const std::string& db_id, const char* field, std::size_t index) {
  if (!db.contains(field)) malformed(db_id, field, index, "missing");
  return db.at(field);
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::DuplicateDbId: return "DuplicateDbId";
    case ErrorCode::UnresolvedTable: return "UnresolvedTable";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::ProviderMismatch: return "ProviderMismatch";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
    case ErrorCode::DuplicateUuid: return "DuplicateUuid";
    case ErrorCode::EmptyCentroids: return "EmptyCentroids";
    case ErrorCode::ZeroSize: return "ZeroSize";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::UnknownTable: return "UnknownTable";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::EdlParse: return "EdlParse";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::LlmUnavailable: return "LlmUnavailable";
    case ErrorCode::UnparseableSelection: return "UnparseableSelection";
    case ErrorCode::NoValidEdl: return "NoValidEdl";
    case ErrorCode::NoValidSql: return "NoValidSql";
    case ErrorCode::EngineError: return "EngineError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Manifest loading

std::vector<DatabaseSchema> parse_tables_manifest(const json& manifest) {
  if (!manifest.is_array()) malformed("<root>", "<root>", 0, "expected a JSON array of databases");

  std::vector<DatabaseSchema> out;
  std::set<std::string> seen;
  for (std::size_t di = 0; di < manifest.size(); ++di) {
    const json& db = manifest[di];
    if (!db.is_object() || !db.contains("db_id") || !db["db_id"].is_string())
      malformed("<root>", "db_id", di, "missing or not a string");
    DatabaseSchema schema;
    schema.db_id = db["db_id"].get<std::string>();
    if (!seen.insert(schema.db_id).second) malformed(schema.db_id, "db_id", di, "duplicate db_id");

    const json& table_names = require(db, schema.db_id, "table_names_original", di);
    const json& column_names = require(db, schema.db_id, "column_names_original", di);
    const json& column_types = require(db, schema.db_id, "column_types", di);
    if (!table_names.is_array()) malformed(schema.db_id, "table_names_original", di, "not an array");
    if (!column_names.is_array()) malformed(schema.db_id, "column_names_original", di, "not an array");
    if (!column_types.is_array() || column_types.size() != column_names.size())
      malformed(schema.db_id, "column_types", di, "must be an array parallel to column_names_original");

    const json* natural_columns = db.contains("column_names") ? &db["column_names"] : nullptr;
    if (natural_columns && (!natural_columns->is_array() || natural_columns->size() != column_names.size()))
      malformed(schema.db_id, "column_names", di, "must be parallel to column_names_original");
    const json* descriptions = db.contains("table_descriptions") ? &db["table_descriptions"] : nullptr;
    if (descriptions && (!descriptions->is_array() || descriptions->size() != table_names.size()))
      malformed(schema.db_id, "table_descriptions", di, "must be parallel to table_names_original");

    for (std::size_t ti = 0; ti < table_names.size(); ++ti) {
      if (!table_names[ti].is_string() || table_names[ti].get<std::string>().empty())
        malformed(schema.db_id, "table_names_original", ti, "table name must be a non-empty string");
      UnionTable t;
      t.db_id = schema.db_id;
      t.original_name = table_names[ti].get<std::string>();
      if (descriptions) {
        if (!(*descriptions)[ti].is_string()) malformed(schema.db_id, "table_descriptions", ti, "not a string");
        t.description = (*descriptions)[ti].get<std::string>();
      }
      schema.tables.push_back(std::move(t));
    }

    for (std::size_t ci = 0; ci < column_names.size(); ++ci) {
      const json& entry = column_names[ci];
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() || !entry[1].is_string())
        malformed(schema.db_id, "column_names_original", ci, "expected [table_index, name]");
      const int table_index = entry[0].get<int>();
      if (table_index < 0) continue;  // the "*" pseudo-column
      if (static_cast<std::size_t>(table_index) >= schema.tables.size())
        malformed(schema.db_id, "column_names_original", ci, "table index out of range");
      ColumnMeta col;
      col.name = entry[1].get<std::string>();
      if (col.name.empty()) malformed(schema.db_id, "column_names_original", ci, "empty column name");
      if (!column_types[ci].is_string()) malformed(schema.db_id, "column_types", ci, "not a string");
      col.data_type = column_types[ci].get<std::string>();
      col.description = col.name;
      if (natural_columns) {
        const json& nat = (*natural_columns)[ci];
        if (nat.is_array() && nat.size() == 2 && nat[1].is_string() && !nat[1].get<std::string>().empty())
          col.description = nat[1].get<std::string>();
      }
      schema.tables[static_cast<std::size_t>(table_index)].columns.push_back(std::move(col));
    }

    if (db.contains("foreign_keys") && db["foreign_keys"].is_array()) {
      // Map flat column indexes back to (table, column) names.
      std::vector<std::pair<std::string, std::string>> flat(column_names.size());
      for (std::size_t ci = 0; ci < column_names.size(); ++ci) {
        const int ti = column_names[ci][0].get<int>();
        if (ti >= 0) flat[ci] = {schema.tables[static_cast<std::size_t>(ti)].original_name,
                                 column_names[ci][1].get<std::string>()};
      }
      const json& fks = db["foreign_keys"];
      for (std::size_t fi = 0; fi < fks.size(); ++fi) {
        const json& fk = fks[fi];
        if (!fk.is_array() || fk.size() != 2 || !fk[0].is_number_integer() || !fk[1].is_number_integer())
          malformed(schema.db_id, "foreign_keys", fi, "expected [column_index, column_index]");
        const auto a = fk[0].get<std::size_t>();
        const auto b = fk[1].get<std::size_t>();
        if (a >= flat.size() || b >= flat.size() || flat[a].first.empty() || flat[b].first.empty())
          malformed(schema.db_id, "foreign_keys", fi, "column index out of range");
        schema.foreign_keys.push_back({flat[a], flat[b]});
      }
    }

    for (auto& t : schema.tables) {
      if (t.description.empty()) t.description = synthesize_description(t);
    }
    out.push_back(std::move(schema));
  }
  return out;
}

std::vector<DatabaseSchema> load_tables_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedManifest, path.string() + ": " + e.what());
  }
  return parse_tables_manifest(manifest);
}

// ---------------------------------------------------------------------------
// Union schema

UnionSchema::UnionSchema(std::vector<UnionTable> tables) : tables_(std::move(tables)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    const auto& t = tables_[i];
    if (!by_union_name_.emplace(t.union_name, i).second)
      throw Error(ErrorCode::DuplicateDbId, "duplicate union table name '" + t.union_name + "'");
    db_ids_.insert(t.db_id);
    column_count_ += t.columns.size();
  }
}

const UnionTable* UnionSchema::find(std::string_view union_name) const {
  auto it = by_union_name_.find(union_name);
  return it == by_union_name_.end() ? nullptr : &tables_[it->second];
}

const UnionTable* UnionSchema::find_in_db(std::string_view db_id, std::string_view original_name) const {
  for (const auto& t : tables_) {
    if (t.db_id == db_id && detail::iequals(t.original_name, original_name)) return &t;
  }
  return nullptr;
}

std::vector<const UnionTable*> UnionSchema::tables_of(std::string_view db_id) const {
  std::vector<const UnionTable*> out;
  for (const auto& t : tables_) {
    if (t.db_id == db_id) out.push_back(&t);
  }
  return out;
}

UnionSchema build_union_schema(const std::vector<DatabaseSchema>& schemas) {
  std::set<std::string> seen;
  std::vector<UnionTable> tables;
  for (const auto& db : schemas) {
    if (!seen.insert(db.db_id).second) throw Error(ErrorCode::DuplicateDbId, db.db_id);
    for (const auto& t : db.tables) {
      UnionTable u = t;
      u.db_id = db.db_id;
      u.union_name = db.db_id + "." + t.original_name;
      for (auto& c : u.columns) c.table_key = u.union_name;
      tables.push_back(std::move(u));
    }
  }
  return UnionSchema(std::move(tables));
}

std::string strip_db_prefix(std::string_view union_name) {
  const auto dot = union_name.find('.');
  return std::string(dot == std::string_view::npos ? union_name : union_name.substr(dot + 1));
}

nlohmann::json to_json(const UnionSchema& schema) {
  json tables = json::array();
  for (const auto& t : schema.tables()) {
    json cols = json::array();
    for (const auto& c : t.columns) {
      cols.push_back({{"name", c.name}, {"description", c.description}, {"data_type", c.data_type}});
    }
    tables.push_back({{"union_name", t.union_name},
                      {"db_id", t.db_id},
                      {"original_name", t.original_name},
                      {"description", t.description},
                      {"columns", std::move(cols)}});
  }
  return {{"db_ids", schema.db_ids()},
          {"table_count", schema.table_count()},
          {"column_count", schema.column_count()},
          {"tables", std::move(tables)}};
}

// ---------------------------------------------------------------------------
// Gold table extraction

namespace {

enum class SqlTok { Word, QuotedIdent, String, Number, Punct };

struct SqlToken {
  SqlTok kind;
  std::string text;
};

std::vector<SqlToken> lex_sql(std::string_view sql) {
  std::vector<SqlToken> out;
  std::size_t i = 0;
  const auto n = sql.size();
  while (i < n) {
    const char c = sql[i];
    if (detail::is_space(c)) {
      ++i;
    } else if (c == '-' && i + 1 < n && sql[i + 1] == '-') {
      while (i < n && sql[i] != '\n') ++i;
    } else if (c == '\'') {
      std::string s;
      ++i;
      while (i < n) {
        if (sql[i] == '\'' && i + 1 < n && sql[i + 1] == '\'') {
          s += '\'';
          i += 2;
        } else if (sql[i] == '\'') {
          ++i;
          break;
        } else {
          s += sql[i++];
        }
      }
      out.push_back({SqlTok::String, std::move(s)});
    } else if (c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::string s;
      ++i;
      while (i < n && sql[i] != close) s += sql[i++];
      if (i < n) ++i;
      out.push_back({SqlTok::QuotedIdent, std::move(s)});
    } else if (detail::is_alpha(c) || c == '_') {
      std::string s;
      while (i < n && (detail::is_alnum(sql[i]) || sql[i] == '_' || sql[i] == '$')) s += sql[i++];
      out.push_back({SqlTok::Word, std::move(s)});
    } else if (detail::is_digit(c)) {
      std::string s;
      while (i < n && (detail::is_alnum(sql[i]) || sql[i] == '.')) s += sql[i++];
      out.push_back({SqlTok::Number, std::move(s)});
    } else {
      out.push_back({SqlTok::Punct, std::string(1, c)});
      ++i;
    }
  }
  return out;
}

bool is_clause_keyword(std::string_view w) {
  static const std::set<std::string, std::less<>> kw = {
      "where", "group", "order", "limit", "having", "on", "using", "union", "intersect", "except",
      "join", "inner", "left", "right", "outer", "cross", "natural", "full", "window", "select",
      "as", "from", "offset", "and", "or", "not", "when", "then", "else", "end", "indexed"};
  return kw.contains(detail::to_lower(w));
}

bool is_word(const SqlToken& t, std::string_view w) {
  return t.kind == SqlTok::Word && detail::iequals(t.text, w);
}

bool is_ident(const SqlToken& t) {
  return t.kind == SqlTok::QuotedIdent || (t.kind == SqlTok::Word && !is_clause_keyword(t.text));
}

}  // namespace

std::vector<std::string> referenced_table_names(std::string_view sql) {
  const auto toks = lex_sql(sql);
  std::set<std::string> cte_names;

  // WITH [RECURSIVE] name [(cols)] AS (...) [, name ...]
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!is_word(toks[i], "with")) continue;
    std::size_t j = i + 1;
    if (j < toks.size() && is_word(toks[j], "recursive")) ++j;
    while (j < toks.size() && is_ident(toks[j])) {
      cte_names.insert(detail::to_lower(toks[j].text));
      // Skip to the matching ')' of the CTE body.
      int depth = 0;
      bool entered = false;
      for (++j; j < toks.size(); ++j) {
        if (toks[j].kind == SqlTok::Punct && toks[j].text == "(") {
          ++depth;
        } else if (toks[j].kind == SqlTok::Punct && toks[j].text == ")") {
          --depth;
          if (depth == 0 && entered) break;
        } else if (depth == 0 && is_word(toks[j], "as")) {
          entered = true;
        }
      }
      ++j;
      if (j < toks.size() && toks[j].kind == SqlTok::Punct && toks[j].text == ",") {
        ++j;
      } else {
        break;
      }
    }
  }

  enum class State { Normal, ExpectTable, AfterTable, ExpectAlias };
  State state = State::Normal;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    switch (state) {
      case State::Normal:
        if (is_word(t, "from") || is_word(t, "join")) state = State::ExpectTable;
        break;
      case State::ExpectTable:
        if (is_ident(t)) {
          std::string name = t.text;
          // schema-qualified: main.city
          while (i + 2 < toks.size() && toks[i + 1].kind == SqlTok::Punct && toks[i + 1].text == "." &&
                 is_ident(toks[i + 2])) {
            name = toks[i + 2].text;
            i += 2;
          }
          if (!cte_names.contains(detail::to_lower(name))) out.push_back(name);
          state = State::AfterTable;
        } else {
          // '(' opens a subquery whose own FROM is found by the same scan.
          state = State::Normal;
        }
        break;
      case State::AfterTable:
        if (is_word(t, "as")) {
          state = State::ExpectAlias;
        } else if (t.kind == SqlTok::Punct && t.text == ",") {
          state = State::ExpectTable;
        } else if (is_word(t, "join")) {
          state = State::ExpectTable;
        } else if (is_ident(t)) {
          state = State::AfterTable;  // bare alias
        } else {
          state = State::Normal;
        }
        break;
      case State::ExpectAlias:
        state = State::AfterTable;
        break;
    }
  }
  return out;
}

GoldSet gold_tables_of(std::string_view sql, const UnionSchema& schema, std::string_view db_id,
                       std::string question_id) {
  GoldSet gold;
  gold.question_id = std::move(question_id);
  for (const auto& name : referenced_table_names(sql)) {
    const UnionTable* t = schema.find_in_db(db_id, name);
    if (!t) {
      throw Error(ErrorCode::UnresolvedTable,
                  "table '" + name + "' not found in database '" + std::string(db_id) + "'");
    }
    gold.tables.insert(t->union_name);
  }
  return gold;
}

}  // namespace credsql

namespace credsql {

const ColumnMeta* SubSchemaTable::find_column(std::string_view column) const {
  for (const auto& c : columns) {
    if (detail::iequals(c.name, column)) return &c;
  }
  return nullptr;
}

const SubSchemaTable* SubSchema::find(std::string_view table) const {
  for (const auto& t : tables) {
    if (detail::iequals(t.name, table) || detail::iequals(t.union_name, table)) return &t;
  }
  return nullptr;
}

namespace {
SubSchemaTable sub_table(const UnionTable& t) {
  return SubSchemaTable{t.original_name, t.union_name, t.db_id, t.description, t.columns};
}
}  // namespace

SubSchema sub_schema_of_db(const UnionSchema& schema, std::string_view db_id) {
  SubSchema sub;
  sub.db_id = std::string(db_id);
  for (const UnionTable* t : schema.tables_of(db_id)) sub.tables.push_back(sub_table(*t));
  if (sub.tables.empty()) throw Error(ErrorCode::UnknownTable, "no tables for database '" + sub.db_id + "'");
  return sub;
}

SubSchema sub_schema_from_selection(const UnionSchema& schema, const std::vector<std::string>& union_names,
                                    const std::map<std::string, std::vector<std::string>>& columns) {
  SubSchema sub;
  for (const auto& name : union_names) {
    const UnionTable* t = schema.find(name);
    if (!t) throw Error(ErrorCode::UnknownTable, "'" + name + "' is not in the schema");
    if (sub.db_id.empty()) sub.db_id = t->db_id;
    SubSchemaTable st = sub_table(*t);
    if (auto it = columns.find(name); it != columns.end() && !it->second.empty()) {
      std::vector<ColumnMeta> kept;
      for (const auto& c : st.columns) {
        for (const auto& want : it->second) {
          if (detail::iequals(c.name, want)) {
            kept.push_back(c);
            break;
          }
        }
      }
      if (!kept.empty()) st.columns = std::move(kept);
    }
    sub.tables.push_back(std::move(st));
  }
  return sub;
}

std::string to_ddl(const SubSchema& sub) {
  std::string out;
  for (const auto& t : sub.tables) {
    out += "CREATE TABLE " + detail::quote_identifier(t.name) + " (";
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
      if (i) out += ", ";
      out += detail::quote_identifier(t.columns[i].name);
      if (!t.columns[i].data_type.empty()) out += " " + t.columns[i].data_type;
    }
    out += ");\n";
  }
  return out;
}

nlohmann::json to_json(const SubSchema& sub) {
  nlohmann::json tables = nlohmann::json::array();
  for (const auto& t : sub.tables) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : t.columns) {
      cols.push_back({{"name", c.name}, {"type", c.data_type}, {"description", c.description}});
    }
    tables.push_back({{"name", t.name}, {"union_name", t.union_name}, {"columns", cols}});
  }
  return {{"db_id", sub.db_id}, {"tables", tables}};
}

}  // namespace credsql
