#include <sys/wait.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

namespace t = credsql::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Runs the built binary with the given arguments; stdout is a pipe, so output is compact JSON.
Run run_cli(const std::string& args, const std::string& stdin_file = {}) {
  const auto err_file = fs::temp_directory_path() / ("credsql_cli_err_" + std::to_string(::getpid()));
  std::string cmd = q(t::tools_dir() / "credsql") + " " + args + " 2>" + q(err_file);
  if (!stdin_file.empty()) cmd += " <" + q(stdin_file);
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int raw = ::pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_file);
  fs::remove(err_file);
  return r;
}

const char* kExample2Sql =
    "SELECT major, age FROM Student WHERE StuID NOT IN (SELECT T1.StuID FROM Has_Pet AS T1 JOIN Pets AS T2 ON "
    "T1.PetID = T2.PetID WHERE T2.PetType = 'cat')\n";

}  // namespace

TEST(Cli, CompileExample2) {
  const auto r = run_cli("compile-edl", (t::data_dir() / "edl" / "example2.edl").string());
  EXPECT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(r.out, kExample2Sql);
}

TEST(Cli, CompileValidatesAgainstManifest) {
  const auto manifest = q(t::data_dir() / "fixtures" / "tables.json");
  const auto ok = run_cli("compile-edl --manifest " + manifest + " --db pets_1",
                          (t::data_dir() / "edl" / "example2.edl").string());
  EXPECT_EQ(ok.status, 0) << ok.err;
  EXPECT_EQ(ok.out, kExample2Sql);
  const auto bad = run_cli("compile-edl --manifest " + manifest + " --db world_1",
                           (t::data_dir() / "edl" / "example2.edl").string());
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.err.find("UnknownTable"), std::string::npos) << bad.err;
}

TEST(Cli, ParseErrorsExitOne) {
  const auto in = fs::temp_directory_path() / "credsql_cli_bad.edl";
  std::ofstream(in) << "#1. Frobnicate the widgets.\n";
  const auto r = run_cli("parse-edl", in.string());
  fs::remove(in);
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("UnknownOperator"), std::string::npos) << r.err;
}

TEST(Cli, ParseEmitsPlanJson) {
  const auto r = run_cli("parse-edl", (t::data_dir() / "edl" / "example2.edl").string());
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("steps").size(), 7u);
}

TEST(Cli, UnknownSubcommandShowsUsage) {
  const auto r = run_cli("frobnicate");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("unknown subcommand 'frobnicate'"), std::string::npos);
  EXPECT_NE(r.err.find("pipeline"), std::string::npos);
}

TEST(Cli, BadOptionIsUsageError) {
  EXPECT_EQ(run_cli("pipeline --parallelism 0").status, 2);
}

TEST(Cli, MissingConfigPathIsReported) {
  const auto r = run_cli("pipeline --manifest /nonexistent/tables.json");
  EXPECT_EQ(r.status, 1);
  EXPECT_NE(r.err.find("paths.manifest"), std::string::npos) << r.err;
}

TEST(Cli, OfflinePipelineMatchesSnapshot) {
  const auto out = fs::temp_directory_path() / "credsql_cli_report.json";
  const auto r = run_cli("pipeline -c " + q(t::data_dir() / "pipeline" / "config.toml") + " --databases " +
                         q(t::fixture_db_dir()) + " -o " + q(out));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto expected = slurp(t::data_dir() / "pipeline" / "expected_report.json");
  EXPECT_EQ(slurp(out), expected);
  EXPECT_EQ(r.out, expected);
  fs::remove(out);
}

TEST(Cli, RetrieveRanksTables) {
  const auto r = run_cli("retrieve --manifest " + q(t::data_dir() / "fixtures" / "tables.json") +
                         " -k 3 -q 'How many pets does each student own?'");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j.size(), 3u);
}
