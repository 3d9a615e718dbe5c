// Builds <out>/<db>/<db>.sqlite from every <db>.sql script in a directory.

#include <fstream>
#include <iostream>
#include <iterator>

#include "credsql/error.hpp"
#include "credsql/sqlite.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: make_fixture_dbs <sql-dir> <out-dir>\n";
    return 2;
  }
  const fs::path src = argv[1];
  const fs::path out = argv[2];
  try {
    int built = 0;
    for (const auto& entry : fs::directory_iterator(src)) {
      if (entry.path().extension() != ".sql") continue;
      const auto db_id = entry.path().stem().string();
      const auto target = out / db_id / (db_id + ".sqlite");
      fs::create_directories(target.parent_path());
      fs::remove(target);
      std::ifstream in(entry.path());
      const std::string script{std::istreambuf_iterator<char>(in), {}};
      auto db = credsql::Database::open(target, false);
      db.exec(script);
      ++built;
    }
    std::cout << "built " << built << " database(s) under " << out.string() << '\n';
    return built ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
