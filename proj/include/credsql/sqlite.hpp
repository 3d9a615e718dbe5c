#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

struct sqlite3;

namespace credsql {

using Blob = std::vector<std::uint8_t>;
using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Value>;

struct ResultSet {
  std::vector<std::string> columns;
  std::vector<Row> rows;

  bool operator==(const ResultSet&) const = default;
};

/// Owning SQLite connection. Move-only.
class Database {
 public:
  static Database open(const std::filesystem::path& path, bool read_only = true);
  static Database open_memory();

  Database(Database&& other) noexcept;
  Database& operator=(Database&& other) noexcept;
  Database(const Database&) = delete;
  Database& operator=(const Database&) = delete;
  ~Database();

  /// Runs a script of statements (DDL, inserts). Throws EngineError.
  void exec(std::string_view script);

  /// Runs exactly one statement and collects all rows; the deadline is
  /// enforced through the progress handler (Timeout).
  ResultSet query(std::string_view sql, std::chrono::milliseconds timeout = std::chrono::seconds(30));

  /// Error message if `sql` does not prepare as a single statement.
  std::optional<std::string> prepare_error(std::string_view sql);

  sqlite3* handle() const noexcept { return db_; }

 private:
  explicit Database(sqlite3* db) : db_(db) {}
  sqlite3* db_ = nullptr;
};

ResultSet execute_sql(const std::filesystem::path& db_path, std::string_view sql,
                      std::chrono::milliseconds timeout = std::chrono::seconds(30));

nlohmann::json to_json(const Value& v);
nlohmann::json to_json(const ResultSet& rs);

}  // namespace credsql
