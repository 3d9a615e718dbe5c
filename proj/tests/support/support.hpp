#pragma once

#include <deque>
#include <filesystem>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "credsql/cluster.hpp"
#include "credsql/edl/plan.hpp"
#include "credsql/http.hpp"
#include "credsql/llm.hpp"
#include "credsql/retrieve.hpp"
#include "credsql/schema.hpp"

namespace credsql::testing {

std::filesystem::path data_dir();
/// Where make_fixture_dbs wrote <db>/<db>.sqlite at build time.
std::filesystem::path fixture_db_dir();
std::filesystem::path fixture_db(const std::string& db_id);
std::filesystem::path tools_dir();
UnionSchema fixture_union();

/// Random valid plan touching any of the 16 operators; round-trips through
/// render/parse by construction.
edl::EdlPlan random_plan(std::mt19937_64& rng, int max_steps = 9);
/// One plan per operator kind is guaranteed over `n` draws by forcing the
/// first 16 plans to start with each operator in turn.
std::vector<edl::EdlPlan> plan_corpus(std::size_t n, std::uint64_t seed);

/// Line-by-line transcription of the clustering pseudocode: visited list of
/// records, per-record cluster_size bumped for the winning category.
struct LiteralRecord {
  std::string uuid;
  Vector vector;
  int cluster_categories = 0;
  int cluster_size = 1;
};
std::vector<LiteralRecord> literal_clustering(const std::vector<ClusterInput>& columns, double s1);

/// Random unit vectors in `dim` dimensions, drawn around a few anchors so
/// similarities span the threshold.
std::vector<ClusterInput> random_columns(std::mt19937_64& rng, std::size_t n, int dim);

struct SuiteCase {
  std::string id;
  std::string db_id;
  std::string question;
  std::string edl;
  std::string gold_sql;
};
/// The hand-curated gold EDL suite.
std::vector<SuiteCase> load_suite();

/// Two-table index over 3-d vectors built so that, for question (1,0,0),
/// T1 has table score 0.5 and one column at 0.8 in a cluster of 4, and T2 has
/// table score 0.55 and one column at 0.8 in a singleton cluster.
SchemaIndex two_table_index();
Vector two_table_question();

/// Replies from a fixed queue and records every conversation it was shown.
class ScriptedChat final : public ChatClient {
 public:
  explicit ScriptedChat(std::vector<std::string> replies);
  std::string complete(const Conversation& messages) override;
  std::vector<Conversation> seen() const;

 private:
  mutable std::mutex mu_;
  std::deque<std::string> replies_;
  std::vector<Conversation> seen_;
};

/// Canned HTTP responses, in order.
class CannedTransport final : public HttpTransport {
 public:
  explicit CannedTransport(std::vector<HttpResponse> responses);
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body,
                    int timeout_seconds) override;
  std::vector<std::string> bodies;
  std::vector<std::string> urls;

 private:
  std::deque<HttpResponse> responses_;
};

}  // namespace credsql::testing
