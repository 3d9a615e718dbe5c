#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "credsql/compiler.hpp"
#include "credsql/edl/edl.hpp"
#include "credsql/http.hpp"
#include "credsql/schema.hpp"

namespace credsql {

enum class LlmMode { Live, Replay, Record };

struct LlmConfig {
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-4o";
  std::string api_key;
  double temperature = 0.0;
  int max_retries = 3;  // total attempts per stage, at least one
  LlmMode mode = LlmMode::Live;
  std::filesystem::path fixture;  // replay source / record target
  int timeout_seconds = 120;
};

LlmMode parse_llm_mode(std::string_view s);
std::string_view to_string(LlmMode mode);

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

using Conversation = std::vector<ChatMessage>;

nlohmann::json to_json(const Conversation& messages);
/// Hex SHA-256 of the compact JSON of the messages; the replay key.
std::string request_hash(const Conversation& messages);

/// One chat completion. Implementations are safe to call concurrently.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Throws Error(LlmUnavailable) when no answer can be produced.
  virtual std::string complete(const Conversation& messages) = 0;
};

/// OpenAI-compatible /v1/chat/completions.
class HttpChatClient final : public ChatClient {
 public:
  HttpChatClient(LlmConfig config, std::shared_ptr<HttpTransport> transport);
  std::string complete(const Conversation& messages) override;

 private:
  LlmConfig config_;
  std::shared_ptr<HttpTransport> transport_;
};

struct FixtureEntry {
  std::string request_hash;
  std::string response_text;
};

std::vector<FixtureEntry> load_fixture(const std::filesystem::path& path);
void save_fixture(const std::filesystem::path& path, const std::vector<FixtureEntry>& entries);

/// Serves recorded responses; repeated identical requests consume their
/// recorded answers in file order. Never touches the network.
class ReplayChatClient final : public ChatClient {
 public:
  explicit ReplayChatClient(const std::filesystem::path& fixture);
  explicit ReplayChatClient(const std::vector<FixtureEntry>& entries);
  std::string complete(const Conversation& messages) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::deque<std::string>> queue_;
};

/// Forwards to another client and appends every exchange to a fixture file.
class RecordingChatClient final : public ChatClient {
 public:
  RecordingChatClient(std::shared_ptr<ChatClient> inner, std::filesystem::path fixture);
  std::string complete(const Conversation& messages) override;
  std::vector<FixtureEntry> entries() const;

 private:
  std::shared_ptr<ChatClient> inner_;
  std::filesystem::path fixture_;
  mutable std::mutex mu_;
  std::vector<FixtureEntry> entries_;
};

/// Client for config.mode: live HTTP, replay from fixture, or record.
std::shared_ptr<ChatClient> make_chat_client(const LlmConfig& config, std::shared_ptr<HttpTransport> transport);

struct FewShotExample {
  std::string question;
  std::string db_id;
  std::string schema_snippet;
  std::vector<std::string> tables;  // union names the question needs
  std::string edl;
  std::string sql;
};

std::vector<FewShotExample> load_few_shots(const std::filesystem::path& path);
std::vector<FewShotExample> parse_few_shots(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Schema selection

struct SchemaSelection {
  SubSchema sub_schema;
  std::map<std::string, std::vector<std::string>> columns;  // model's column picks, per union name
  std::vector<std::string> warnings;
  int attempts = 0;  // LLM calls made; 0 when short-circuited
};

Conversation selection_prompt(std::string_view question, const std::vector<UnionTable>& candidates,
                              const std::vector<FewShotExample>& few_shots);

/// Picks the sub-schema among ranked candidates. Names outside the candidate
/// set are dropped with a warning; one candidate is selected without asking.
SchemaSelection select_schema(std::string_view question, const std::vector<UnionTable>& candidates,
                              ChatClient& client, const LlmConfig& config,
                              const std::vector<FewShotExample>& few_shots);

/// {"tables": [...], "columns": {...}} pulled out of free text or fences.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

// ---------------------------------------------------------------------------
// Text-to-EDL

struct EdlGeneration {
  edl::EdlPlan plan;
  std::string text;  // the accepted response, EDL lines only
  int attempts = 0;
  std::vector<std::vector<edl::Diagnostic>> rejected;  // diagnostics of each failed attempt
};

Conversation edl_prompt(std::string_view question, const SubSchema& sub_schema,
                        const std::vector<FewShotExample>& few_shots);

/// Step lines ("#n ...") of a model response, fences and prose removed.
std::string extract_edl_lines(std::string_view response);

/// Re-prompts with the parser/validator diagnostics until a plan without
/// errors comes back or config.max_retries attempts are spent (NoValidEdl).
EdlGeneration generate_edl(std::string_view question, const SubSchema& sub_schema, ChatClient& client,
                           const LlmConfig& config, const std::vector<FewShotExample>& few_shots);

// ---------------------------------------------------------------------------
// EDL-to-SQL through the model

Conversation sql_prompt(const edl::EdlPlan& plan, const SubSchema& sub_schema,
                        const std::vector<FewShotExample>& few_shots);

/// First SQL statement in a response: fences stripped, trailing ';' removed.
std::string extract_sql(std::string_view response);

SqlQuery edl_to_sql_llm(const edl::EdlPlan& plan, const SubSchema& sub_schema, ChatClient& client,
                        const LlmConfig& config, const std::vector<FewShotExample>& few_shots);

}  // namespace credsql
