#include "credsql/sqlite.hpp"

#include <sqlite3.h>

#include "credsql/error.hpp"

namespace credsql {

namespace {

struct Statement {
  sqlite3_stmt* stmt = nullptr;
  ~Statement() { sqlite3_finalize(stmt); }
};

// Prepares one statement; trailing whitespace and semicolons are allowed.
std::string prepare(sqlite3* db, std::string_view sql, Statement& st) {
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &st.stmt, &tail) != SQLITE_OK) {
    return sqlite3_errmsg(db);
  }
  if (!st.stmt) return "empty statement";
  std::string_view rest(tail, static_cast<std::size_t>(sql.data() + sql.size() - tail));
  for (char c : rest) {
    if (c != ';' && c != ' ' && c != '\n' && c != '\r' && c != '\t') return "more than one statement";
  }
  return {};
}

}  // namespace

Database Database::open(const std::filesystem::path& path, bool read_only) {
  if (read_only && !std::filesystem::exists(path)) {
    throw Error(ErrorCode::FileNotFound, "database " + path.string() + " does not exist");
  }
  sqlite3* db = nullptr;
  const int flags = read_only ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  if (sqlite3_open_v2(path.string().c_str(), &db, flags | SQLITE_OPEN_NOMUTEX, nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw Error(ErrorCode::EngineError, "cannot open " + path.string() + ": " + msg);
  }
  return Database(db);
}

Database Database::open_memory() {
  sqlite3* db = nullptr;
  if (sqlite3_open_v2(":memory:", &db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_MEMORY | SQLITE_OPEN_NOMUTEX, nullptr) !=
      SQLITE_OK) {
    sqlite3_close(db);
    throw Error(ErrorCode::EngineError, "cannot open in-memory database");
  }
  return Database(db);
}

Database::Database(Database&& other) noexcept : db_(std::exchange(other.db_, nullptr)) {}

Database& Database::operator=(Database&& other) noexcept {
  if (this != &other) {
    sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
  }
  return *this;
}

Database::~Database() { sqlite3_close(db_); }

void Database::exec(std::string_view script) {
  char* err = nullptr;
  const std::string s(script);
  if (sqlite3_exec(db_, s.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::EngineError, msg);
  }
}

std::optional<std::string> Database::prepare_error(std::string_view sql) {
  Statement st;
  auto err = prepare(db_, sql, st);
  if (err.empty()) return std::nullopt;
  return err;
}

ResultSet Database::query(std::string_view sql, std::chrono::milliseconds timeout) {
  Statement st;
  if (auto err = prepare(db_, sql, st); !err.empty()) throw Error(ErrorCode::EngineError, err);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  bool timed_out = false;
  struct Guard {
    const std::chrono::steady_clock::time_point* deadline;
    bool* flag;
  } guard{&deadline, &timed_out};
  sqlite3_progress_handler(
      db_, 1000,
      [](void* p) -> int {
        auto* g = static_cast<Guard*>(p);
        if (std::chrono::steady_clock::now() > *g->deadline) {
          *g->flag = true;
          return 1;
        }
        return 0;
      },
      &guard);
  struct Reset {
    sqlite3* db;
    ~Reset() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
  } reset{db_};

  ResultSet rs;
  const int ncol = sqlite3_column_count(st.stmt);
  for (int i = 0; i < ncol; ++i) rs.columns.emplace_back(sqlite3_column_name(st.stmt, i));
  while (true) {
    const int rc = sqlite3_step(st.stmt);
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) {
      if (timed_out) throw Error(ErrorCode::Timeout, "query exceeded " + std::to_string(timeout.count()) + " ms");
      throw Error(ErrorCode::EngineError, sqlite3_errmsg(db_));
    }
    Row row;
    row.reserve(static_cast<std::size_t>(ncol));
    for (int i = 0; i < ncol; ++i) {
      switch (sqlite3_column_type(st.stmt, i)) {
        case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(st.stmt, i))); break;
        case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(st.stmt, i)); break;
        case SQLITE_TEXT:
          row.emplace_back(std::string(reinterpret_cast<const char*>(sqlite3_column_text(st.stmt, i)),
                                       static_cast<std::size_t>(sqlite3_column_bytes(st.stmt, i))));
          break;
        case SQLITE_BLOB: {
          const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(st.stmt, i));
          row.emplace_back(Blob(p, p + sqlite3_column_bytes(st.stmt, i)));
          break;
        }
        default: row.emplace_back(std::monostate{});
      }
    }
    rs.rows.push_back(std::move(row));
  }
  return rs;
}

ResultSet execute_sql(const std::filesystem::path& db_path, std::string_view sql, std::chrono::milliseconds timeout) {
  auto db = Database::open(db_path, true);
  return db.query(sql, timeout);
}

nlohmann::json to_json(const Value& v) {
  return std::visit(
      [](const auto& x) -> nlohmann::json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
        else if constexpr (std::is_same_v<T, Blob>) return nlohmann::json::binary(x);
        else return x;
      },
      v);
}

nlohmann::json to_json(const ResultSet& rs) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rs.rows) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& v : r) row.push_back(to_json(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", rs.columns}, {"rows", rows}};
}

}  // namespace credsql
