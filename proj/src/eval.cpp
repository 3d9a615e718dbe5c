#include "credsql/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "credsql/compiler.hpp"
#include "credsql/detail/strings.hpp"
#include "credsql/error.hpp"

namespace credsql {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<ExamplePair> parse_questions(std::string_view jsonl) {
  std::vector<ExamplePair> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      const auto j = json::parse(line);
      ExamplePair e{j.at("question_id"), j.at("db_id"), j.at("question"), j.at("gold_sql"), std::nullopt};
      if (j.contains("difficulty") && !j.at("difficulty").is_null()) e.difficulty = j.at("difficulty");
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, "questions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ExamplePair> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "questions file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_questions(ss.str());
}

bool has_top_level_order_by(std::string_view sql) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    const char c = sql[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == '(') {
      ++depth;
    } else if (c == ')') {
      --depth;
    } else if (depth == 0 && (c == 'o' || c == 'O') && (i == 0 || !detail::is_alnum(sql[i - 1])) &&
               detail::istarts_with(sql.substr(i), "order")) {
      std::size_t j = i + 5;
      if (j < sql.size() && !detail::is_space(sql[j])) continue;
      while (j < sql.size() && detail::is_space(sql[j])) ++j;
      if (detail::istarts_with(sql.substr(j), "by") && (j + 2 == sql.size() || !detail::is_alnum(sql[j + 2]))) {
        return true;
      }
    }
  }
  return false;
}

bool results_match(const ResultSet& predicted, const ResultSet& gold, bool ordered) {
  if (predicted.columns.size() != gold.columns.size()) return false;
  if (predicted.rows.size() != gold.rows.size()) return false;
  if (ordered) return predicted.rows == gold.rows;
  auto a = predicted.rows;
  auto b = gold.rows;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

ExVerdict execution_verdict(std::string_view pred_sql, std::string_view gold_sql, const std::filesystem::path& db_path,
                            std::chrono::milliseconds timeout) {
  auto db = Database::open(db_path);
  const auto gold = db.query(gold_sql, timeout);
  ResultSet pred;
  try {
    pred = db.query(pred_sql, timeout);
  } catch (const Error& e) {
    return {false, e.what()};
  }
  if (results_match(pred, gold, has_top_level_order_by(gold_sql))) return {true, {}};
  return {false, "results differ (" + std::to_string(pred.rows.size()) + " vs " + std::to_string(gold.rows.size()) +
                     " rows)"};
}

bool execution_accuracy(std::string_view pred_sql, std::string_view gold_sql, const std::filesystem::path& db_path,
                        std::chrono::milliseconds timeout) {
  return execution_verdict(pred_sql, gold_sql, db_path, timeout).match;
}

std::optional<std::filesystem::path> resolve_db_path(const std::filesystem::path& dir, std::string_view db_id) {
  const std::string id(db_id);
  for (auto p : {dir / id / (id + ".sqlite"), dir / (id + ".sqlite")}) {
    if (std::filesystem::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

namespace {

/// Runs fn(i) for i in [0, n) on up to `parallelism` threads.
void parallel_for(std::size_t n, int parallelism, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, parallelism)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (auto i = next++; i < n; i = next++) fn(i);
    });
  }
}

std::size_t retrieval_depth(const RetrievalOptions& r, const std::vector<int>& ks) {
  std::size_t depth = r.k;
  for (int k : ks) depth = std::max(depth, static_cast<std::size_t>(std::max(k, 0)));
  return depth;
}

std::map<int, double> recall_of(const std::vector<std::string>& ranked, const GoldSet& gold,
                                const std::vector<int>& ks) {
  std::map<int, double> out;
  for (int k : ks) out[k] = recall_at_k(ranked, gold, static_cast<std::size_t>(k));
  return out;
}

std::map<int, double> mean_recall(const std::vector<const std::map<int, double>*>& rows, const std::vector<int>& ks) {
  std::map<int, double> out;
  if (rows.empty()) return out;
  for (int k : ks) {
    double sum = 0;
    for (const auto* r : rows) sum += r->at(k);
    out[k] = sum / static_cast<double>(rows.size());
  }
  return out;
}

struct Slot {
  QuestionResult result;
  std::vector<StageFailure> failures;
};

void check_databases(const std::vector<ExamplePair>& examples, const std::filesystem::path& dir) {
  for (const auto& e : examples) {
    if (!resolve_db_path(dir, e.db_id)) {
      throw Error(ErrorCode::ConfigError, "database '" + e.db_id + "' not found under " + dir.string());
    }
  }
}

}  // namespace

EvalReport run_pipeline(const std::vector<ExamplePair>& examples, const UnionSchema& schema, const SchemaIndex& index,
                        const EmbeddingProvider& provider, ChatClient& client, const LlmConfig& llm,
                        const PipelineOptions& options) {
  check_databases(examples, options.db_dir);
  auto retrieval = options.retrieval;
  retrieval.k = retrieval_depth(options.retrieval, options.recall_ks);
  retrieval.m = std::max(retrieval.m, retrieval.k);

  std::vector<Slot> slots(examples.size());
  parallel_for(examples.size(), options.parallelism, [&](std::size_t i) {
    const auto& ex = examples[i];
    auto& slot = slots[i];
    auto& r = slot.result;
    r.question_id = ex.question_id;
    r.db_id = ex.db_id;
    r.bucket = ex.difficulty.value_or("");
    std::string stage;
    auto fail = [&](const std::string& reason) { slot.failures.push_back({ex.question_id, stage, reason}); };

    try {
      stage = "gold";
      const auto gold = gold_tables_of(ex.gold_sql, schema, ex.db_id, ex.question_id);

      stage = "retrieve";
      std::vector<std::string> ranked;
      try {
        for (const auto& s : rank_tables(ex.question, provider, index, retrieval)) ranked.push_back(s.table_name);
      } catch (const Error&) {
        r.recall_at = recall_of({}, gold, options.recall_ks);
        throw;
      }
      r.recall_at = recall_of(ranked, gold, options.recall_ks);
      if (ranked.size() > options.retrieval.k) ranked.resize(options.retrieval.k);
      r.retrieved = ranked;

      std::vector<UnionTable> candidates;
      for (const auto& name : ranked) {
        if (const auto* t = schema.find(name)) candidates.push_back(*t);
      }

      stage = "select";
      const auto selection = select_schema(ex.question, candidates, client, llm, options.few_shots);
      for (const auto& t : selection.sub_schema.tables) r.selected.push_back(t.union_name);

      stage = "edl";
      const auto generated = generate_edl(ex.question, selection.sub_schema, client, llm, options.few_shots);
      r.edl = generated.text;
      r.edl_attempts = generated.attempts;

      stage = "sql";
      const auto query = options.llm_sql
                             ? edl_to_sql_llm(generated.plan, selection.sub_schema, client, llm, options.few_shots)
                             : compile(generated.plan, selection.sub_schema);
      r.sql = query.text;

      stage = "execute";
      const auto verdict = execution_verdict(r.sql, ex.gold_sql, *resolve_db_path(options.db_dir, ex.db_id),
                                             options.timeout);
      r.ex = verdict.match;
      if (!verdict.match) fail(verdict.reason);
    } catch (const std::exception& e) {
      if (stage == "execute") stage = "gold_sql";  // only the gold query can throw there
      fail(e.what());
    }
  });

  EvalReport report;
  report.n_questions = static_cast<int>(examples.size());
  std::vector<const std::map<int, double>*> recalls;
  std::map<std::string, std::pair<int, int>> buckets;  // hits, total
  for (auto& slot : slots) {
    if (!slot.result.recall_at.empty()) recalls.push_back(&slot.result.recall_at);
    auto count = [&](const std::string& b) {
      buckets[b].first += slot.result.ex ? 1 : 0;
      buckets[b].second += 1;
    };
    count("all");
    if (!slot.result.bucket.empty()) count(slot.result.bucket);
    report.failures.insert(report.failures.end(), slot.failures.begin(), slot.failures.end());
  }
  report.recall_at = mean_recall(recalls, options.recall_ks);
  if (examples.empty()) buckets.clear();
  for (const auto& [b, ht] : buckets) report.ex_by_bucket[b] = static_cast<double>(ht.first) / ht.second;
  for (auto& slot : slots) report.questions.push_back(std::move(slot.result));
  return report;
}

RecallReport recall_report(const std::vector<ExamplePair>& examples, const UnionSchema& schema,
                           const SchemaIndex& index, const EmbeddingProvider& provider, const std::vector<int>& ks,
                           RetrievalOptions options, int parallelism) {
  options.k = retrieval_depth(options, ks);
  options.m = std::max(options.m, options.k);
  std::vector<std::optional<std::map<int, double>>> rows(examples.size());
  std::vector<std::optional<StageFailure>> failed(examples.size());
  parallel_for(examples.size(), parallelism, [&](std::size_t i) {
    const auto& ex = examples[i];
    std::string stage = "gold";
    try {
      const auto gold = gold_tables_of(ex.gold_sql, schema, ex.db_id, ex.question_id);
      stage = "retrieve";
      std::vector<std::string> ranked;
      for (const auto& s : rank_tables(ex.question, provider, index, options)) ranked.push_back(s.table_name);
      rows[i] = recall_of(ranked, gold, ks);
    } catch (const std::exception& e) {
      failed[i] = StageFailure{ex.question_id, stage, e.what()};
    }
  });
  RecallReport report;
  std::vector<const std::map<int, double>*> ok;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]) ok.push_back(&*rows[i]);
    if (failed[i]) report.failures.push_back(*failed[i]);
  }
  report.n_questions = static_cast<int>(ok.size());
  report.recall_at = mean_recall(ok, ks);
  return report;
}

namespace {

ordered_json recall_json(const std::map<int, double>& m) {
  ordered_json j = ordered_json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

ordered_json failures_json(const std::vector<StageFailure>& fs) {
  ordered_json a = ordered_json::array();
  for (const auto& f : fs) a.push_back({{"question_id", f.question_id}, {"stage", f.stage}, {"reason", f.reason}});
  return a;
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ordered_json to_json(const EvalReport& report) {
  ordered_json ex = ordered_json::object();
  for (const auto& [b, v] : report.ex_by_bucket) ex[b] = v;
  ordered_json qs = ordered_json::array();
  for (const auto& q : report.questions) {
    qs.push_back({{"question_id", q.question_id},
                  {"db_id", q.db_id},
                  {"bucket", q.bucket},
                  {"retrieved", q.retrieved},
                  {"recall_at", recall_json(q.recall_at)},
                  {"selected", q.selected},
                  {"edl", q.edl},
                  {"edl_attempts", q.edl_attempts},
                  {"sql", q.sql},
                  {"ex", q.ex}});
  }
  return {{"n_questions", report.n_questions},
          {"recall_at", recall_json(report.recall_at)},
          {"ex_by_bucket", ex},
          {"failures", failures_json(report.failures)},
          {"questions", qs}};
}

ordered_json to_json(const RecallReport& report) {
  return {{"n_questions", report.n_questions},
          {"recall_at", recall_json(report.recall_at)},
          {"failures", failures_json(report.failures)}};
}

std::string format_report(const RecallReport& report) {
  std::string out = "questions: " + std::to_string(report.n_questions) + "\n";
  for (const auto& [k, v] : report.recall_at) out += "recall@" + std::to_string(k) + "\t" + fixed(v) + "\n";
  for (const auto& f : report.failures) out += "failed " + f.question_id + " [" + f.stage + "] " + f.reason + "\n";
  return out;
}

std::string format_report(const EvalReport& report) {
  std::string out = "questions: " + std::to_string(report.n_questions) + "\n";
  for (const auto& [k, v] : report.recall_at) out += "recall@" + std::to_string(k) + "\t" + fixed(v) + "\n";
  for (const auto& [b, v] : report.ex_by_bucket) out += "EX " + b + "\t" + fixed(v * 100, 1) + "\n";
  for (const auto& f : report.failures) out += "failed " + f.question_id + " [" + f.stage + "] " + f.reason + "\n";
  return out;
}

}  // namespace credsql
