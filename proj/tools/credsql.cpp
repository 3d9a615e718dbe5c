// credsql: every pipeline stage as a subcommand.
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "credsql/compiler.hpp"
#include "credsql/config.hpp"
#include "credsql/detail/strings.hpp"
#include "credsql/eval.hpp"
#include "credsql/http.hpp"
#include "credsql/llm.hpp"
#include "credsql/retrieve.hpp"

namespace fs = std::filesystem;
using namespace credsql;
using nlohmann::json;

namespace {

struct Flags {
  std::string config;
  std::string manifest, index, databases, questions, few_shots, fixture, mode;
  int parallelism = 0;
  bool pretty = false;
};

std::string read_stream(std::istream& in) { return {std::istreambuf_iterator<char>(in), {}}; }

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") return read_stream(std::cin);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, path);
  return read_stream(in);
}

CliConfig resolve_config(const Flags& f) {
  auto c = f.config.empty() ? default_config() : load_config(f.config);
  if (!f.manifest.empty()) c.paths.manifest = f.manifest;
  if (!f.index.empty()) c.paths.index = f.index;
  if (!f.databases.empty()) c.paths.databases = f.databases;
  if (!f.questions.empty()) c.paths.questions = f.questions;
  if (!f.few_shots.empty()) c.paths.few_shots = f.few_shots;
  if (!f.fixture.empty()) c.llm.fixture = f.fixture;
  if (!f.mode.empty()) c.llm.mode = parse_llm_mode(f.mode);
  if (f.parallelism > 0) c.parallelism = f.parallelism;
  return c;
}

bool pretty_output(const Flags& f) { return f.pretty || isatty(fileno(stdout)); }

template <class J>
void emit(const J& j, const Flags& f) {
  std::cout << (pretty_output(f) ? j.dump(2) : j.dump()) << '\n';
}

UnionSchema load_union(const CliConfig& c) {
  require_path(c.paths.manifest, "paths.manifest");
  return build_union_schema(load_tables_manifest(c.paths.manifest));
}

std::shared_ptr<HttpTransport> transport_for(const CliConfig& c) {
  // replay must never reach the network, whatever the fixture holds
  if (c.llm.mode == LlmMode::Replay) return std::make_shared<FailOnConnectTransport>();
  return std::make_shared<HttplibTransport>();
}

std::unique_ptr<EmbeddingProvider> make_embedder(const CliConfig& c) {
  if (c.embedding.provider == "http") {
    HttpEmbedderConfig hc{c.embedding.base_url, c.embedding.model, c.embedding.api_key, c.embedding.dim,
                          c.embedding.timeout_seconds};
    return std::make_unique<HttpEmbedder>(hc, std::make_shared<HttplibTransport>());
  }
  return std::make_unique<TrigramEmbedder>(c.embedding.dim);
}

SchemaIndex load_or_build_index(const CliConfig& c, const UnionSchema& schema, const EmbeddingProvider& provider) {
  if (!c.paths.index.empty() && fs::exists(c.paths.index)) return load_index(c.paths.index);
  return build_index(schema, provider, {c.retrieval.cluster_options()});
}

std::vector<FewShotExample> few_shots_of(const CliConfig& c) {
  if (c.paths.few_shots.empty()) return {};
  require_path(c.paths.few_shots, "paths.few_shots");
  return load_few_shots(c.paths.few_shots);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = std::string(detail::trim(item));
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

SubSchema sub_schema_for(const UnionSchema& schema, const std::string& db, const std::string& tables) {
  if (!tables.empty()) return sub_schema_from_selection(schema, split_list(tables));
  if (!db.empty()) return sub_schema_of_db(schema, db);
  return {};
}

/// Plan from EDL text or plan JSON (a leading '{').
edl::EdlPlan read_plan(const std::string& text) {
  if (detail::trim(text).starts_with("{")) {
    try {
      return edl::plan_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::EdlParse, std::string("bad plan JSON: ") + e.what());
    }
  }
  return edl::parse_edl(text);
}

void print_diagnostics(const std::vector<edl::Diagnostic>& ds) {
  for (const auto& d : ds) std::cerr << edl::format_diagnostic(d) << '\n';
}

std::vector<UnionTable> candidates_of(const UnionSchema& schema, const std::vector<ScoredTable>& ranked) {
  std::vector<UnionTable> out;
  for (const auto& s : ranked) {
    if (const auto* t = schema.find(s.table_name)) out.push_back(*t);
  }
  return out;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "TOML config file")->check(CLI::ExistingFile);
  cmd->add_flag("--pretty", f.pretty, "Indented JSON / human-readable tables");
}

void add_manifest(CLI::App* cmd, Flags& f) {
  cmd->add_option("--manifest", f.manifest, "tables.json-style schema manifest");
}

void add_index(CLI::App* cmd, Flags& f) {
  cmd->add_option("--index", f.index, "Index file (built on the fly when absent)");
}

void add_llm(CLI::App* cmd, Flags& f) {
  cmd->add_option("--mode", f.mode, "LLM mode")->check(CLI::IsMember({"live", "replay", "record"}));
  cmd->add_option("--fixture", f.fixture, "Replay/record fixture file");
  cmd->add_option("--few-shots", f.few_shots, "Few-shot examples (JSON)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"credsql: large-schema text-to-SQL toolkit", "credsql"};
  app.require_subcommand(1);
  Flags f;
  std::function<int()> action;

  // schema dump
  auto* schema_cmd = app.add_subcommand("schema", "Schema manifest utilities");
  schema_cmd->require_subcommand(1);
  auto* dump = schema_cmd->add_subcommand("dump", "Print the union schema as JSON");
  add_common(dump, f);
  add_manifest(dump, f);
  dump->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      emit(to_json(load_union(c)), f);
      return 0;
    };
  });

  // index-build
  std::string index_out;
  auto* index_build = app.add_subcommand("index-build", "Embed and cluster the schema, write the index");
  add_common(index_build, f);
  add_manifest(index_build, f);
  index_build->add_option("-o,--out", index_out, "Output index file (default: paths.index)");
  index_build->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      const fs::path out = index_out.empty() ? c.paths.index : fs::path(index_out);
      if (out.empty()) throw Error(ErrorCode::ConfigError, "no output path: pass --out or set paths.index");
      const auto schema = load_union(c);
      const auto provider = make_embedder(c);
      const auto index = build_index(schema, *provider, {c.retrieval.cluster_options()});
      save_index(index, out);
      emit(json{{"index", out.string()},
                {"tables", index.tables().size()},
                {"columns", index.columns().size()},
                {"clusters", index.cluster_table().cluster_count}},
           f);
      return 0;
    };
  });

  // cluster
  double s1 = -2;
  auto* cluster = app.add_subcommand("cluster", "Cluster schema columns and print the clusters");
  add_common(cluster, f);
  add_manifest(cluster, f);
  cluster->add_option("--s1", s1, "Similarity threshold")->check(CLI::Range(-1.0, 1.0));
  cluster->callback([&] {
    action = [&] {
      auto c = resolve_config(f);
      if (s1 > -2) c.retrieval.s1 = s1;
      const auto schema = load_union(c);
      const auto provider = make_embedder(c);
      const auto index = build_index(schema, *provider, {c.retrieval.cluster_options()});
      std::map<int, std::vector<std::string>> members;
      for (const auto& col : index.columns()) members[col.cluster_id].push_back(col.table + "." + col.name);
      json clusters = json::array();
      for (const auto& [id, cols] : members) {
        clusters.push_back({{"cluster_id", id}, {"size", cols.size()}, {"columns", cols}});
      }
      emit(json{{"threshold_s1", c.retrieval.s1},
                {"cluster_count", index.cluster_table().cluster_count},
                {"clusters", clusters}},
           f);
      return 0;
    };
  });

  // retrieve
  std::string question;
  std::size_t k_flag = 0;
  bool unweighted = false;
  auto* retrieve = app.add_subcommand("retrieve", "Rank schema tables for a question");
  add_common(retrieve, f);
  add_manifest(retrieve, f);
  add_index(retrieve, f);
  retrieve->add_option("-q,--question", question, "Question text")->required();
  retrieve->add_option("-k", k_flag, "Tables to return");
  retrieve->add_flag("--unweighted", unweighted, "Ignore cluster weights");
  retrieve->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      const auto schema = load_union(c);
      const auto provider = make_embedder(c);
      const auto index = load_or_build_index(c, schema, *provider);
      auto opts = c.retrieval.retrieval_options();
      if (k_flag) opts.k = k_flag;
      if (unweighted) opts.weighted = false;
      json out = json::array();
      for (const auto& s : rank_tables(question, *provider, index, opts)) out.push_back(to_json(s));
      emit(out, f);
      return 0;
    };
  });

  // eval-recall
  std::string ks_flag = "1,3,5,10,15";
  auto* eval_recall = app.add_subcommand("eval-recall", "Table recall@k over a question set");
  add_common(eval_recall, f);
  add_manifest(eval_recall, f);
  add_index(eval_recall, f);
  eval_recall->add_option("--questions", f.questions, "Questions (JSON lines)");
  eval_recall->add_option("--ks", ks_flag, "Comma-separated k values");
  eval_recall->add_flag("--unweighted", unweighted, "Ignore cluster weights");
  eval_recall->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      require_path(c.paths.questions, "paths.questions");
      std::vector<int> ks;
      for (const auto& k : split_list(ks_flag)) {
        try {
          ks.push_back(std::stoi(k));
        } catch (const std::exception&) {
          throw CLI::ValidationError("--ks", "not an integer: " + k);
        }
      }
      const auto schema = load_union(c);
      const auto provider = make_embedder(c);
      const auto index = load_or_build_index(c, schema, *provider);
      auto opts = c.retrieval.retrieval_options();
      if (unweighted) opts.weighted = false;
      const auto report =
          recall_report(load_questions(c.paths.questions), schema, index, *provider, ks, opts, c.parallelism);
      if (pretty_output(f)) std::cout << format_report(report);
      else emit(to_json(report), f);
      return 0;
    };
  });

  // parse-edl
  std::string input;
  auto* parse_cmd = app.add_subcommand("parse-edl", "Parse EDL text (stdin) into plan JSON");
  add_common(parse_cmd, f);
  parse_cmd->add_option("input", input, "EDL file (default stdin)");
  parse_cmd->callback([&] {
    action = [&] {
      const auto result = edl::parse_edl_text(read_input(input));
      print_diagnostics(result.diagnostics);
      if (!result.ok()) return 1;
      emit(edl::to_json(result.plan), f);
      return 0;
    };
  });

  // render-edl
  auto* render_cmd = app.add_subcommand("render-edl", "Render plan JSON (or EDL) in canonical EDL text");
  add_common(render_cmd, f);
  render_cmd->add_option("input", input, "Plan file (default stdin)");
  render_cmd->callback([&] {
    action = [&] {
      std::cout << edl::render_edl(read_plan(read_input(input)));
      return 0;
    };
  });

  // compile-edl
  std::string db_flag, tables_flag;
  auto* compile_cmd = app.add_subcommand("compile-edl", "Compile EDL text or plan JSON (stdin) to SQL");
  add_common(compile_cmd, f);
  add_manifest(compile_cmd, f);
  compile_cmd->add_option("input", input, "Plan file (default stdin)");
  compile_cmd->add_option("--db", db_flag, "Validate against this database of the manifest");
  compile_cmd->add_option("--tables", tables_flag, "Validate against these union tables (comma-separated)");
  compile_cmd->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      const auto plan = read_plan(read_input(input));
      SubSchema sub;
      if (!db_flag.empty() || !tables_flag.empty()) sub = sub_schema_for(load_union(c), db_flag, tables_flag);
      if (sub.empty()) {
        std::cout << compile(plan, sub).text << '\n';
        return 0;
      }
      const auto outcome = compile_or_explain(plan, sub);
      print_diagnostics(outcome.diagnostics);
      if (!outcome.ok()) return 1;
      std::cout << outcome.query->text << '\n';
      return 0;
    };
  });

  // select-schema
  auto* select_cmd = app.add_subcommand("select-schema", "Retrieve candidates and let the model pick the sub-schema");
  add_common(select_cmd, f);
  add_manifest(select_cmd, f);
  add_index(select_cmd, f);
  add_llm(select_cmd, f);
  select_cmd->add_option("-q,--question", question, "Question text")->required();
  select_cmd->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      const auto schema = load_union(c);
      const auto provider = make_embedder(c);
      const auto index = load_or_build_index(c, schema, *provider);
      const auto client = make_chat_client(c.llm, transport_for(c));
      const auto ranked = rank_tables(question, *provider, index, c.retrieval.retrieval_options());
      const auto sel = select_schema(question, candidates_of(schema, ranked), *client, c.llm, few_shots_of(c));
      for (const auto& w : sel.warnings) std::cerr << "warning: " << w << '\n';
      emit(json{{"sub_schema", to_json(sel.sub_schema)}, {"columns", sel.columns}, {"attempts", sel.attempts}}, f);
      return 0;
    };
  });

  // gen-edl
  auto* gen_cmd = app.add_subcommand("gen-edl", "Generate EDL for a question over a given sub-schema");
  add_common(gen_cmd, f);
  add_manifest(gen_cmd, f);
  add_llm(gen_cmd, f);
  gen_cmd->add_option("-q,--question", question, "Question text")->required();
  auto* db_opt = gen_cmd->add_option("--db", db_flag, "Use every table of this database");
  gen_cmd->add_option("--tables", tables_flag, "Union table names (comma-separated)")->excludes(db_opt);
  gen_cmd->callback([&] {
    action = [&] {
      if (db_flag.empty() && tables_flag.empty()) throw CLI::RequiredError("--db or --tables");
      const auto c = resolve_config(f);
      const auto sub = sub_schema_for(load_union(c), db_flag, tables_flag);
      const auto client = make_chat_client(c.llm, transport_for(c));
      const auto gen = generate_edl(question, sub, *client, c.llm, few_shots_of(c));
      std::cerr << "attempts: " << gen.attempts << '\n';
      std::cout << gen.text;
      return 0;
    };
  });

  // eval-ex
  std::string pred_sql, gold_sql, predictions;
  auto* ex_cmd = app.add_subcommand("eval-ex", "Execution accuracy of predicted SQL");
  add_common(ex_cmd, f);
  ex_cmd->add_option("--databases", f.databases, "Directory of SQLite databases");
  ex_cmd->add_option("--questions", f.questions, "Questions with gold SQL (JSON lines)");
  ex_cmd->add_option("--predictions", predictions, "JSON lines of {question_id, sql}");
  ex_cmd->add_option("--db", db_flag, "Database id (single-pair mode)");
  ex_cmd->add_option("--pred", pred_sql, "Predicted SQL (single-pair mode)");
  ex_cmd->add_option("--gold", gold_sql, "Gold SQL (single-pair mode)");
  ex_cmd->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      require_path(c.paths.databases, "paths.databases");
      if (!pred_sql.empty() || !gold_sql.empty()) {
        if (pred_sql.empty() || gold_sql.empty() || db_flag.empty()) {
          throw CLI::ValidationError("eval-ex", "single-pair mode needs --db, --pred and --gold");
        }
        const auto path = resolve_db_path(c.paths.databases, db_flag);
        if (!path) throw Error(ErrorCode::ConfigError, "database '" + db_flag + "' not found");
        const auto v = execution_verdict(pred_sql, gold_sql, *path);
        emit(json{{"ex", v.match}, {"reason", v.reason}}, f);
        return 0;
      }
      if (predictions.empty()) throw CLI::ValidationError("eval-ex", "pass --predictions or --pred/--gold/--db");
      require_path(c.paths.questions, "paths.questions");
      std::map<std::string, std::string> preds;
      {
        std::istringstream in(read_input(predictions));
        std::string line;
        while (std::getline(in, line)) {
          if (detail::trim(line).empty()) continue;
          const auto j = json::parse(line);
          preds[j.at("question_id")] = j.at("sql");
        }
      }
      std::map<std::string, std::pair<int, int>> buckets;
      json per = json::array();
      for (const auto& q : load_questions(c.paths.questions)) {
        const auto path = resolve_db_path(c.paths.databases, q.db_id);
        if (!path) throw Error(ErrorCode::ConfigError, "database '" + q.db_id + "' not found");
        const auto it = preds.find(q.question_id);
        const auto v = it == preds.end() ? ExVerdict{false, "no prediction"} : execution_verdict(it->second, q.gold_sql, *path);
        for (const auto& b : {std::string("all"), q.difficulty.value_or("")}) {
          if (b.empty()) continue;
          buckets[b].first += v.match;
          buckets[b].second += 1;
        }
        per.push_back({{"question_id", q.question_id}, {"ex", v.match}, {"reason", v.reason}});
      }
      json ex = json::object();
      for (const auto& [b, ht] : buckets) ex[b] = static_cast<double>(ht.first) / ht.second;
      emit(json{{"ex_by_bucket", ex}, {"questions", per}}, f);
      return 0;
    };
  });

  // pipeline
  std::string report_out;
  bool llm_sql = false;
  auto* pipeline = app.add_subcommand("pipeline", "Retrieve, select, generate EDL, compile and score a question set");
  add_common(pipeline, f);
  add_manifest(pipeline, f);
  add_index(pipeline, f);
  add_llm(pipeline, f);
  pipeline->add_option("--questions", f.questions, "Questions (JSON lines)");
  pipeline->add_option("--databases", f.databases, "Directory of SQLite databases");
  pipeline->add_option("--parallelism", f.parallelism, "Concurrent questions")->check(CLI::PositiveNumber);
  pipeline->add_option("-o,--out", report_out, "Also write the JSON report here");
  pipeline->add_flag("--llm-sql", llm_sql, "Let the model write SQL from the EDL instead of the compiler");
  pipeline->callback([&] {
    action = [&] {
      const auto c = resolve_config(f);
      require_path(c.paths.manifest, "paths.manifest");
      require_path(c.paths.questions, "paths.questions");
      require_path(c.paths.databases, "paths.databases");
      if (c.llm.mode == LlmMode::Replay) require_path(c.llm.fixture, "llm.fixture");

      const auto schema = load_union(c);
      const auto provider = make_embedder(c);
      const auto index = load_or_build_index(c, schema, *provider);
      const auto transport = transport_for(c);
      const auto client = make_chat_client(c.llm, transport);
      PipelineOptions opts;
      opts.retrieval = c.retrieval.retrieval_options();
      opts.llm_sql = llm_sql;
      opts.parallelism = c.parallelism;
      opts.db_dir = c.paths.databases;
      opts.few_shots = few_shots_of(c);
      const auto report = run_pipeline(load_questions(c.paths.questions), schema, index, *provider, *client, c.llm, opts);
      const auto j = to_json(report);
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!out) throw Error(ErrorCode::FileNotFound, "cannot write " + report_out);
        out << j.dump(2) << '\n';
      }
      if (pretty_output(f)) std::cout << format_report(report);
      else std::cout << j.dump(2) << '\n';
      return 0;
    };
  });

  if (argc > 1 && argv[1][0] != '-' && !app.get_subcommand_no_throw(argv[1])) {
    std::cerr << "unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 0;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
