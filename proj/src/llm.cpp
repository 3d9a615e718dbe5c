#include "credsql/llm.hpp"

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "credsql/detail/strings.hpp"
#include "credsql/error.hpp"
#include "credsql/sqlite.hpp"

namespace credsql {

using nlohmann::json;

LlmMode parse_llm_mode(std::string_view s) {
  if (detail::iequals(s, "live")) return LlmMode::Live;
  if (detail::iequals(s, "replay")) return LlmMode::Replay;
  if (detail::iequals(s, "record")) return LlmMode::Record;
  throw Error(ErrorCode::ConfigError, "unknown llm mode '" + std::string(s) + "' (live, replay, record)");
}

std::string_view to_string(LlmMode mode) {
  switch (mode) {
    case LlmMode::Live: return "live";
    case LlmMode::Replay: return "replay";
    case LlmMode::Record: return "record";
  }
  return "live";
}

json to_json(const Conversation& messages) {
  json a = json::array();
  for (const auto& m : messages) a.push_back({{"role", m.role}, {"content", m.content}});
  return a;
}

std::string request_hash(const Conversation& messages) {
  const std::string payload = to_json(messages).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(payload.data(), payload.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::InvalidArgument, "SHA-256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

// ---------------------------------------------------------------------------
// clients

HttpChatClient::HttpChatClient(LlmConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  if (!transport_) throw Error(ErrorCode::InvalidArgument, "chat client needs a transport");
}

std::string HttpChatClient::complete(const Conversation& messages) {
  std::string base = config_.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  const json request = {{"model", config_.model}, {"messages", to_json(messages)}, {"temperature", config_.temperature}};
  HttpHeaders headers = {{"Content-Type", "application/json"}};
  if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);

  // rate limits and 5xx get two more tries; anything else is final
  std::string last_error;
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::seconds(attempt));
    HttpResponse res;
    try {
      res = transport_->post(base + "/v1/chat/completions", headers, request.dump(), config_.timeout_seconds);
    } catch (const Error& e) {
      last_error = e.what();
      continue;
    }
    if (res.status == 429 || res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200) {
      throw Error(ErrorCode::LlmUnavailable, "chat endpoint returned HTTP " + std::to_string(res.status) + ": " +
                                                 res.body.substr(0, 300));
    }
    try {
      const auto body = json::parse(res.body);
      return body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::LlmUnavailable, std::string("malformed chat response: ") + e.what());
    }
  }
  throw Error(ErrorCode::LlmUnavailable, "chat endpoint unreachable: " + last_error);
}

std::vector<FixtureEntry> load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "replay fixture not found: " + path.string());
  try {
    const auto j = json::parse(in);
    std::vector<FixtureEntry> out;
    for (const auto& e : j) out.push_back({e.at("request_hash"), e.at("response_text")});
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, "bad replay fixture " + path.string() + ": " + e.what());
  }
}

void save_fixture(const std::filesystem::path& path, const std::vector<FixtureEntry>& entries) {
  json a = json::array();
  for (const auto& e : entries) a.push_back({{"request_hash", e.request_hash}, {"response_text", e.response_text}});
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::FileNotFound, "cannot write fixture: " + path.string());
  out << a.dump(2) << '\n';
}

ReplayChatClient::ReplayChatClient(const std::filesystem::path& fixture) : ReplayChatClient(load_fixture(fixture)) {}

ReplayChatClient::ReplayChatClient(const std::vector<FixtureEntry>& entries) {
  for (const auto& e : entries) queue_[e.request_hash].push_back(e.response_text);
}

std::string ReplayChatClient::complete(const Conversation& messages) {
  const auto hash = request_hash(messages);
  std::lock_guard lock(mu_);
  auto it = queue_.find(hash);
  if (it == queue_.end() || it->second.empty()) {
    throw Error(ErrorCode::LlmUnavailable, "no recorded response for request " + hash);
  }
  auto text = std::move(it->second.front());
  it->second.pop_front();
  return text;
}

RecordingChatClient::RecordingChatClient(std::shared_ptr<ChatClient> inner, std::filesystem::path fixture)
    : inner_(std::move(inner)), fixture_(std::move(fixture)) {}

std::string RecordingChatClient::complete(const Conversation& messages) {
  auto text = inner_->complete(messages);
  std::lock_guard lock(mu_);
  entries_.push_back({request_hash(messages), text});
  save_fixture(fixture_, entries_);
  return text;
}

std::vector<FixtureEntry> RecordingChatClient::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

std::shared_ptr<ChatClient> make_chat_client(const LlmConfig& config, std::shared_ptr<HttpTransport> transport) {
  switch (config.mode) {
    case LlmMode::Replay: return std::make_shared<ReplayChatClient>(config.fixture);
    case LlmMode::Record:
      if (config.fixture.empty()) throw Error(ErrorCode::ConfigError, "record mode needs a fixture path");
      return std::make_shared<RecordingChatClient>(std::make_shared<HttpChatClient>(config, std::move(transport)),
                                                   config.fixture);
    case LlmMode::Live: break;
  }
  return std::make_shared<HttpChatClient>(config, std::move(transport));
}

std::vector<FewShotExample> parse_few_shots(const json& j) {
  std::vector<FewShotExample> out;
  try {
    for (const auto& e : j) {
      FewShotExample ex;
      ex.question = e.at("question");
      ex.db_id = e.value("db_id", "");
      ex.schema_snippet = e.value("schema_snippet", "");
      ex.tables = e.value("tables", std::vector<std::string>{});
      ex.edl = e.at("edl");
      ex.sql = e.value("sql", "");
      out.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("bad few-shot file: ") + e.what());
  }
  return out;
}

std::vector<FewShotExample> load_few_shots(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "few-shot file not found: " + path.string());
  try {
    return parse_few_shots(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, "bad few-shot file " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// response extraction

namespace {

/// Body of the first ``` fence, or the whole text when there is none.
std::string_view unfence(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return detail::trim(text);
  auto body_start = text.find('\n', open);
  if (body_start == std::string_view::npos) return detail::trim(text.substr(open + 3));
  ++body_start;
  const auto close = text.find("```", body_start);
  return detail::trim(text.substr(body_start, close == std::string_view::npos ? std::string_view::npos
                                                                               : close - body_start));
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace

std::optional<json> extract_json_object(std::string_view text) {
  auto try_parse = [](std::string_view s) -> std::optional<json> {
    auto j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(unfence(text))) return j;
  // first balanced {...}, string-aware
  for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        if (auto j = try_parse(text.substr(open, i - open + 1))) return j;
        break;
      }
    }
  }
  return std::nullopt;
}

std::string extract_edl_lines(std::string_view response) {
  const auto body = unfence(response);
  std::string out;
  for (auto line : lines_of(body)) {
    line = detail::trim(line);
    if (line.size() >= 2 && line[0] == '#' && detail::is_digit(line[1])) {
      out += line;
      out += '\n';
    }
  }
  return out.empty() ? std::string(body) : out;
}

std::string extract_sql(std::string_view response) {
  std::string_view sql = unfence(response);
  // cut at the first ';' outside quotes
  char quote = 0;
  for (std::size_t i = 0; i < sql.size(); ++i) {
    const char c = sql[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == ';') {
      sql = sql.substr(0, i);
      break;
    }
  }
  return std::string(detail::trim(sql));
}

// ---------------------------------------------------------------------------
// prompts

namespace {

constexpr std::string_view kSelectionTask =
    "You are a database expert. A question must be answered with one SQL query over a large collection of "
    "databases. A retriever has proposed candidate tables, each named database.table. Choose the tables and "
    "columns the query needs.";

constexpr std::string_view kSelectionRules =
    "Rules:\n"
    "- Choose only from the candidate tables and copy their names exactly.\n"
    "- All chosen tables must belong to the same database (the part before the dot).\n"
    "- Include every table the query touches, including tables that only link other tables.\n"
    "- For each chosen table, list the columns the query uses.\n"
    "- Reply with one JSON object and nothing else, shaped like "
    "{\"tables\": [\"db.table\"], \"columns\": {\"db.table\": [\"column\"]}}.";

constexpr std::string_view kEdlTask =
    "You translate questions about a SQLite database into an execution description: a numbered list of steps, "
    "one per line, each starting with #n. Later steps refer to earlier results as #n. Every step must follow one "
    "of these templates, where [..] names a table or column and COND is a SQL-style condition:";

constexpr std::string_view kEdlRules =
    "Use only tables and columns from the schema. Reply with the steps only, one per line, and nothing else.";

constexpr std::string_view kSqlTask =
    "You convert an execution description of a query into one SQLite SELECT statement that performs exactly "
    "those steps. Reply with the SQL statement only.";

std::string describe_candidate(std::size_t rank, const UnionTable& t) {
  std::string out = std::to_string(rank) + ". " + t.union_name;
  if (!t.description.empty()) out += ": " + t.description;
  out += "\n   columns: ";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    const auto& c = t.columns[i];
    if (i) out += "; ";
    out += c.name;
    if (!c.data_type.empty()) out += " (" + c.data_type + ")";
    if (!c.description.empty() && !detail::iequals(c.description, c.name)) out += " - " + c.description;
  }
  return out;
}

std::string edl_templates() {
  std::string out;
  for (std::size_t i = 0; i < edl::kOperatorCount; ++i) {
    out += "- ";
    out += edl::template_text(i);
    out += '\n';
  }
  return out;
}

Conversation with_feedback(Conversation base, const std::string& reply, const std::string& feedback) {
  base.push_back({"assistant", reply});
  base.push_back({"user", feedback});
  return base;
}

int attempt_budget(const LlmConfig& config) { return std::max(1, config.max_retries); }

}  // namespace

Conversation selection_prompt(std::string_view question, const std::vector<UnionTable>& candidates,
                              const std::vector<FewShotExample>& few_shots) {
  std::string user;
  user += kSelectionRules;
  if (!few_shots.empty()) {
    user += "\n\nExamples:";
    for (const auto& ex : few_shots) {
      json answer = {{"tables", ex.tables}};
      user += "\nQuestion: " + ex.question + "\nAnswer: " + answer.dump();
    }
  }
  user += "\n\nCandidate tables:\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) user += describe_candidate(i + 1, candidates[i]) + "\n";
  user += "\nQuestion: " + std::string(question) + "\nAnswer:";
  return {{"system", std::string(kSelectionTask)}, {"user", std::move(user)}};
}

namespace {

struct ParsedSelection {
  std::vector<const UnionTable*> tables;
  std::map<std::string, std::vector<std::string>> columns;
  std::vector<std::string> warnings;
};

const UnionTable* match_candidate(const std::vector<UnionTable>& candidates, std::string_view name) {
  for (const auto& c : candidates) {
    if (c.union_name == name) return &c;
  }
  for (const auto& c : candidates) {
    if (detail::iequals(c.union_name, name)) return &c;
  }
  // bare original name, only when unambiguous
  const UnionTable* hit = nullptr;
  for (const auto& c : candidates) {
    if (detail::iequals(c.original_name, name)) {
      if (hit) return nullptr;
      hit = &c;
    }
  }
  return hit;
}

/// Throws a plain message when the reply cannot be used at all.
ParsedSelection interpret_selection(const std::string& reply, const std::vector<UnionTable>& candidates) {
  const auto j = extract_json_object(reply);
  if (!j) throw std::runtime_error("no JSON object found in the reply");
  if (!j->contains("tables") || !j->at("tables").is_array()) {
    throw std::runtime_error("the JSON object has no \"tables\" array");
  }
  ParsedSelection sel;
  std::set<const UnionTable*> seen;
  for (const auto& item : j->at("tables")) {
    if (!item.is_string()) continue;
    const auto name = item.get<std::string>();
    const auto* t = match_candidate(candidates, name);
    if (!t) {
      sel.warnings.push_back("dropped table '" + name + "': not among the candidates");
      continue;
    }
    if (seen.insert(t).second) sel.tables.push_back(t);
  }
  if (!sel.tables.empty()) {
    const auto db = sel.tables.front()->db_id;
    std::erase_if(sel.tables, [&](const UnionTable* t) {
      if (t->db_id == db) return false;
      sel.warnings.push_back("dropped table '" + t->union_name + "': not in database " + db);
      return true;
    });
  }
  if (sel.tables.empty()) throw std::runtime_error("none of the named tables is a candidate");

  if (j->contains("columns") && j->at("columns").is_object()) {
    for (const auto& [name, cols] : j->at("columns").items()) {
      const auto* t = match_candidate(candidates, name);
      if (!t || std::find(sel.tables.begin(), sel.tables.end(), t) == sel.tables.end() || !cols.is_array()) {
        continue;
      }
      auto& picked = sel.columns[t->union_name];
      for (const auto& c : cols) {
        if (!c.is_string()) continue;
        const auto col = c.get<std::string>();
        const auto it = std::find_if(t->columns.begin(), t->columns.end(),
                                     [&](const ColumnMeta& m) { return detail::iequals(m.name, col); });
        if (it == t->columns.end()) {
          sel.warnings.push_back("dropped column '" + col + "' of " + t->union_name + ": no such column");
        } else if (std::find(picked.begin(), picked.end(), it->name) == picked.end()) {
          picked.push_back(it->name);
        }
      }
    }
  }
  return sel;
}

SubSchema sub_schema_of(const std::vector<const UnionTable*>& tables) {
  SubSchema sub;
  for (const auto* t : tables) {
    sub.db_id = t->db_id;
    sub.tables.push_back({t->original_name, t->union_name, t->db_id, t->description, t->columns});
  }
  return sub;
}

}  // namespace

SchemaSelection select_schema(std::string_view question, const std::vector<UnionTable>& candidates,
                              ChatClient& client, const LlmConfig& config,
                              const std::vector<FewShotExample>& few_shots) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "schema selection needs at least one candidate");
  SchemaSelection out;
  if (candidates.size() == 1) {
    out.sub_schema = sub_schema_of({&candidates.front()});
    return out;
  }

  const auto base = selection_prompt(question, candidates, few_shots);
  auto messages = base;
  std::string last_problem;
  for (int attempt = 1; attempt <= attempt_budget(config); ++attempt) {
    out.attempts = attempt;
    const auto reply = client.complete(messages);
    try {
      auto sel = interpret_selection(reply, candidates);
      out.sub_schema = sub_schema_of(sel.tables);
      out.columns = std::move(sel.columns);
      out.warnings.insert(out.warnings.end(), sel.warnings.begin(), sel.warnings.end());
      return out;
    } catch (const std::runtime_error& e) {
      last_problem = e.what();
      messages = with_feedback(base, reply,
                               "That reply could not be used: " + last_problem +
                                   ". Reply with only the JSON object, choosing from the candidate tables.");
    }
  }
  throw Error(ErrorCode::UnparseableSelection,
              "no usable selection after " + std::to_string(out.attempts) + " attempt(s): " + last_problem);
}

// ---------------------------------------------------------------------------
// text-to-EDL

Conversation edl_prompt(std::string_view question, const SubSchema& sub_schema,
                        const std::vector<FewShotExample>& few_shots) {
  std::string system(kEdlTask);
  system += "\n" + edl_templates() + std::string(kEdlRules);

  std::string user;
  if (!few_shots.empty()) {
    user += "Examples:\n";
    for (const auto& ex : few_shots) {
      if (!ex.schema_snippet.empty()) user += "Schema:\n" + std::string(detail::trim(ex.schema_snippet)) + "\n";
      user += "Question: " + ex.question + "\nSteps:\n" + std::string(detail::trim(ex.edl)) + "\n\n";
    }
  }
  user += "Schema:\n" + to_ddl(sub_schema) + "\nQuestion: " + std::string(question) + "\nSteps:";
  return {{"system", std::move(system)}, {"user", std::move(user)}};
}

EdlGeneration generate_edl(std::string_view question, const SubSchema& sub_schema, ChatClient& client,
                           const LlmConfig& config, const std::vector<FewShotExample>& few_shots) {
  if (sub_schema.empty()) throw Error(ErrorCode::InvalidArgument, "EDL generation needs a non-empty sub-schema");
  EdlGeneration out;
  const auto base = edl_prompt(question, sub_schema, few_shots);
  auto messages = base;
  std::vector<edl::Diagnostic> last;
  for (int attempt = 1; attempt <= attempt_budget(config); ++attempt) {
    out.attempts = attempt;
    const auto reply = client.complete(messages);
    const auto text = extract_edl_lines(reply);
    auto parsed = edl::parse_edl_text(text);
    auto diagnostics = parsed.diagnostics;
    if (!edl::has_errors(diagnostics)) {
      auto checked = edl::validate_plan(parsed.plan, sub_schema);
      diagnostics.insert(diagnostics.end(), checked.begin(), checked.end());
    }
    if (!edl::has_errors(diagnostics)) {
      out.plan = std::move(parsed.plan);
      out.text = text;
      return out;
    }
    last = diagnostics;
    out.rejected.push_back(diagnostics);
    messages = with_feedback(base, reply,
                             "The steps above were rejected:\n" + edl::format_diagnostics(diagnostics) +
                                 "\nReturn the complete corrected steps, one per line, and nothing else.");
  }
  throw Error(ErrorCode::NoValidEdl, "no valid EDL after " + std::to_string(out.attempts) + " attempt(s):\n" +
                                         edl::format_diagnostics(last));
}

// ---------------------------------------------------------------------------
// EDL-to-SQL

Conversation sql_prompt(const edl::EdlPlan& plan, const SubSchema& sub_schema,
                        const std::vector<FewShotExample>& few_shots) {
  std::string user;
  if (!few_shots.empty()) {
    user += "Examples:\n";
    for (const auto& ex : few_shots) {
      if (ex.sql.empty()) continue;
      user += "Steps:\n" + std::string(detail::trim(ex.edl)) + "\nSQL: " + std::string(detail::trim(ex.sql)) + "\n\n";
    }
  }
  user += "Schema:\n" + to_ddl(sub_schema) + "\nSteps:\n" + edl::render_edl(plan) + "SQL:";
  return {{"system", std::string(kSqlTask)}, {"user", std::move(user)}};
}

SqlQuery edl_to_sql_llm(const edl::EdlPlan& plan, const SubSchema& sub_schema, ChatClient& client,
                        const LlmConfig& config, const std::vector<FewShotExample>& few_shots) {
  auto db = Database::open_memory();
  db.exec(to_ddl(sub_schema));
  const auto base = sql_prompt(plan, sub_schema, few_shots);
  auto messages = base;
  std::string problem;
  int attempts = 0;
  for (int attempt = 1; attempt <= attempt_budget(config); ++attempt) {
    attempts = attempt;
    const auto reply = client.complete(messages);
    const auto sql = extract_sql(reply);
    if (!detail::istarts_with(sql, "select") && !detail::istarts_with(sql, "with")) {
      problem = "the reply is not a SELECT statement";
    } else if (auto err = db.prepare_error(sql)) {
      problem = "the statement does not prepare: " + *err;
    } else {
      return {sql, "sqlite", plan.root};
    }
    messages = with_feedback(base, reply, "That SQL was rejected: " + problem + ". Reply with the corrected SQL only.");
  }
  throw Error(ErrorCode::NoValidSql, "no valid SQL after " + std::to_string(attempts) + " attempt(s): " + problem);
}

}  // namespace credsql
