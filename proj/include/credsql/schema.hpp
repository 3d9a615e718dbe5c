#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace credsql {

struct ColumnMeta {
  std::string name;
  std::string description;
  std::string data_type;
  std::string table_key;  // union_name of the owning table

  bool operator==(const ColumnMeta&) const = default;
};

struct UnionTable {
  std::string db_id;
  std::string original_name;
  std::string union_name;
  std::string description;
  std::vector<ColumnMeta> columns;

  bool operator==(const UnionTable&) const = default;
};

/// One database as read from a tables.json-style manifest. Tables keep their
/// original names; `union_name` is filled in only by build_union_schema.
struct DatabaseSchema {
  std::string db_id;
  std::vector<UnionTable> tables;
  // Foreign keys as ((table, column), (table, column)) pairs, original names.
  std::vector<std::pair<std::pair<std::string, std::string>, std::pair<std::string, std::string>>>
      foreign_keys;
};

class UnionSchema {
 public:
  UnionSchema() = default;
  explicit UnionSchema(std::vector<UnionTable> tables);

  const std::vector<UnionTable>& tables() const noexcept { return tables_; }
  const std::set<std::string>& db_ids() const noexcept { return db_ids_; }
  std::size_t column_count() const noexcept { return column_count_; }
  std::size_t table_count() const noexcept { return tables_.size(); }

  const UnionTable* find(std::string_view union_name) const;
  /// Case-insensitive lookup of an original table name inside one database.
  const UnionTable* find_in_db(std::string_view db_id, std::string_view original_name) const;
  std::vector<const UnionTable*> tables_of(std::string_view db_id) const;

 private:
  std::vector<UnionTable> tables_;
  std::set<std::string> db_ids_;
  std::size_t column_count_ = 0;
  std::map<std::string, std::size_t, std::less<>> by_union_name_;
};

struct GoldSet {
  std::string question_id;
  std::set<std::string> tables;

  bool operator==(const GoldSet&) const = default;
};

std::vector<DatabaseSchema> load_tables_manifest(const std::filesystem::path& path);
std::vector<DatabaseSchema> parse_tables_manifest(const nlohmann::json& manifest);

UnionSchema build_union_schema(const std::vector<DatabaseSchema>& schemas);

/// Table identifiers referenced in FROM/JOIN clauses of `sql`, at any nesting
/// depth, resolved against `db_id` inside `schema`. Aliases and CTE names are
/// not tables and are skipped.
GoldSet gold_tables_of(std::string_view sql, const UnionSchema& schema, std::string_view db_id,
                       std::string question_id = {});

/// Raw FROM/JOIN table identifiers, unresolved, in order of appearance.
std::vector<std::string> referenced_table_names(std::string_view sql);

nlohmann::json to_json(const UnionSchema& schema);

/// Table as seen by the EDL validator, the compiler and the prompts: the
/// original (unprefixed) name is what plans and SQL use.
struct SubSchemaTable {
  std::string name;
  std::string union_name;
  std::string db_id;
  std::string description;
  std::vector<ColumnMeta> columns;

  const ColumnMeta* find_column(std::string_view column) const;
  bool operator==(const SubSchemaTable&) const = default;
};

/// The selected sub-schema d_i a question is answered against. All tables
/// come from one database.
struct SubSchema {
  std::string db_id;
  std::vector<SubSchemaTable> tables;

  /// Case-insensitive match on original or union name.
  const SubSchemaTable* find(std::string_view table) const;
  bool empty() const noexcept { return tables.empty(); }
  bool operator==(const SubSchema&) const = default;
};

SubSchema sub_schema_of_db(const UnionSchema& schema, std::string_view db_id);
/// Keeps only `union_names` (in the given order); `columns`, when non-empty for
/// a table, restricts that table's columns. Unknown names throw UnknownTable.
SubSchema sub_schema_from_selection(const UnionSchema& schema, const std::vector<std::string>& union_names,
                                    const std::map<std::string, std::vector<std::string>>& columns = {});

/// CREATE TABLE statements for the sub-schema (original names), used to check
/// that generated SQL prepares.
std::string to_ddl(const SubSchema& sub);
nlohmann::json to_json(const SubSchema& sub);

/// "db.table" -> "table"; names without a prefix are returned unchanged.
std::string strip_db_prefix(std::string_view union_name);

}  // namespace credsql
