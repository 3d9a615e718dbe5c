#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "credsql/llm.hpp"
#include "credsql/retrieve.hpp"
#include "credsql/sqlite.hpp"

namespace credsql {

struct ExamplePair {
  std::string question_id;
  std::string db_id;
  std::string question;
  std::string gold_sql;
  std::optional<std::string> difficulty;  // easy / medium / hard / extra
};

/// JSON lines: question_id, db_id, question, gold_sql, difficulty?
std::vector<ExamplePair> load_questions(const std::filesystem::path& path);
std::vector<ExamplePair> parse_questions(std::string_view jsonl);

/// ORDER BY at parenthesis depth 0, outside literals.
bool has_top_level_order_by(std::string_view sql);

/// Multiset equality of rows (sequence equality when `ordered`); column
/// order matters, column names do not.
bool results_match(const ResultSet& predicted, const ResultSet& gold, bool ordered);

struct ExVerdict {
  bool match = false;
  std::string reason;  // empty on a match
};

/// Throws EngineError/Timeout only when the gold query itself fails.
ExVerdict execution_verdict(std::string_view pred_sql, std::string_view gold_sql, const std::filesystem::path& db_path,
                            std::chrono::milliseconds timeout = std::chrono::seconds(30));
bool execution_accuracy(std::string_view pred_sql, std::string_view gold_sql, const std::filesystem::path& db_path,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30));

/// dir/<db>/<db>.sqlite, then dir/<db>.sqlite.
std::optional<std::filesystem::path> resolve_db_path(const std::filesystem::path& dir, std::string_view db_id);

struct StageFailure {
  std::string question_id;
  std::string stage;  // retrieve, gold, select, edl, sql, execute
  std::string reason;

  bool operator==(const StageFailure&) const = default;
};

struct QuestionResult {
  std::string question_id;
  std::string db_id;
  std::string bucket;
  std::vector<std::string> retrieved;      // top-k union names
  std::map<int, double> recall_at;         // empty when gold extraction failed
  std::vector<std::string> selected;       // union names
  std::string edl;
  std::string sql;
  int edl_attempts = 0;
  bool ex = false;
};

struct EvalReport {
  std::map<int, double> recall_at;
  std::map<std::string, double> ex_by_bucket;
  int n_questions = 0;
  std::vector<StageFailure> failures;
  std::vector<QuestionResult> questions;
};

struct PipelineOptions {
  RetrievalOptions retrieval;  // k = candidates handed to schema selection
  std::vector<int> recall_ks = {1, 3, 5, 10, 15};
  bool llm_sql = false;  // edl_to_sql_llm instead of the compiler
  int parallelism = 1;
  std::filesystem::path db_dir;
  std::chrono::milliseconds timeout = std::chrono::seconds(30);
  std::vector<FewShotExample> few_shots;
};

/// rank_tables -> select_schema -> generate_edl -> compile -> EX, per
/// question; stage failures are recorded and never stop the batch. Throws
/// ConfigError when a referenced database is missing.
EvalReport run_pipeline(const std::vector<ExamplePair>& examples, const UnionSchema& schema, const SchemaIndex& index,
                        const EmbeddingProvider& provider, ChatClient& client, const LlmConfig& llm,
                        const PipelineOptions& options);

struct RecallReport {
  std::map<int, double> recall_at;
  int n_questions = 0;  // questions whose gold set was extracted
  std::vector<StageFailure> failures;
};

RecallReport recall_report(const std::vector<ExamplePair>& examples, const UnionSchema& schema,
                           const SchemaIndex& index, const EmbeddingProvider& provider, const std::vector<int>& ks,
                           RetrievalOptions options = {}, int parallelism = 1);

nlohmann::ordered_json to_json(const EvalReport& report);
nlohmann::ordered_json to_json(const RecallReport& report);
std::string format_report(const EvalReport& report);
std::string format_report(const RecallReport& report);

}  // namespace credsql
