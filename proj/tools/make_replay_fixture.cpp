// make_replay_fixture: records a replay fixture for the offline pipeline run.
//
// Replies come from a script keyed by question id instead of a live model, so
// the fixture is reproducible; see data/pipeline/script.json.
//
// usage: make_replay_fixture <config.toml> <script.json> <databases-dir>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>

#include <nlohmann/json.hpp>

#include "credsql/config.hpp"
#include "credsql/error.hpp"
#include "credsql/eval.hpp"

using namespace credsql;
using nlohmann::json;

namespace {

struct Script {
  std::string selection;
  std::vector<std::string> edl;
};

class ScriptedChatClient final : public ChatClient {
 public:
  explicit ScriptedChatClient(std::map<std::string, Script> by_question) : by_question_(std::move(by_question)) {}

  std::string complete(const Conversation& messages) override {
    const auto& user = messages.at(1).content;
    const auto at = user.rfind("\nQuestion: ");
    if (at == std::string::npos) throw Error(ErrorCode::LlmUnavailable, "no question in prompt");
    const auto start = at + 11;
    const auto question = user.substr(start, user.find('\n', start) - start);
    const auto it = by_question_.find(question);
    if (it == by_question_.end()) throw Error(ErrorCode::LlmUnavailable, "unscripted question: " + question);

    if (user.ends_with("Answer:")) return it->second.selection;
    // EDL: a repair turn carries the previous reply; answer with the next one
    const auto& replies = it->second.edl;
    std::size_t next = 0;
    if (messages.size() > 2) {
      const auto prev = std::find(replies.begin(), replies.end(), messages[2].content);
      next = static_cast<std::size_t>(prev - replies.begin()) + 1;
    }
    if (next >= replies.size()) throw Error(ErrorCode::LlmUnavailable, "script exhausted for: " + question);
    return replies[next];
  }

 private:
  std::map<std::string, Script> by_question_;
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 4) {
    std::cerr << "usage: make_replay_fixture <config.toml> <script.json> <databases-dir>\n";
    return 2;
  }
  try {
    auto c = load_config(argv[1]);
    std::ifstream in(argv[2]);
    if (!in) throw Error(ErrorCode::FileNotFound, std::string("cannot read ") + argv[2]);
    std::map<std::string, Script> scripts;
    for (const auto& s : json::parse(in)) {
      scripts[s.at("question").get<std::string>()] = {s.at("selection").get<std::string>(),
                                                      s.at("edl").get<std::vector<std::string>>()};
    }

    const auto schema = build_union_schema(load_tables_manifest(c.paths.manifest));
    TrigramEmbedder provider(c.embedding.dim);
    const auto index = build_index(schema, provider, {c.retrieval.cluster_options()});
    std::filesystem::remove(c.llm.fixture);
    RecordingChatClient client(std::make_shared<ScriptedChatClient>(std::move(scripts)), c.llm.fixture);

    PipelineOptions opts;
    opts.retrieval = c.retrieval.retrieval_options();
    opts.parallelism = 1;  // fixture order follows question order
    opts.db_dir = argv[3];
    opts.few_shots = load_few_shots(c.paths.few_shots);
    const auto report = run_pipeline(load_questions(c.paths.questions), schema, index, provider, client, c.llm, opts);
    std::cout << format_report(report);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "make_replay_fixture: " << e.what() << '\n';
    return 1;
  }
}
