#include "credsql/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "credsql/detail/strings.hpp"
#include "credsql/error.hpp"

namespace credsql {

namespace fs = std::filesystem;

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, where + ": " + msg);
}

// A raw value from either source: TOML node or environment string.
struct Raw {
  const toml::node* node = nullptr;
  std::string_view text;
  std::string where;
};

std::string as_string(const Raw& r) {
  if (!r.node) return std::string(r.text);
  if (auto v = r.node->value<std::string>()) return *v;
  bad(r.where, "expected a string");
}

double as_double(const Raw& r) {
  if (r.node) {
    if (auto v = r.node->value<double>()) return *v;  // integers convert too
    bad(r.where, "expected a number");
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(r.text), &used);
    if (used != r.text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    bad(r.where, "expected a number, got '" + std::string(r.text) + "'");
  }
}

long long as_int(const Raw& r) {
  if (r.node) {
    if (r.node->is_integer()) return r.node->as_integer()->get();
    bad(r.where, "expected an integer");
  }
  try {
    std::size_t used = 0;
    const long long v = std::stoll(std::string(r.text), &used);
    if (used != r.text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    bad(r.where, "expected an integer, got '" + std::string(r.text) + "'");
  }
}

std::size_t as_count(const Raw& r) {
  const auto v = as_int(r);
  if (v < 1) bad(r.where, "must be at least 1");
  return static_cast<std::size_t>(v);
}

bool as_bool(const Raw& r) {
  if (r.node) {
    if (auto v = r.node->value<bool>()) return *v;
    bad(r.where, "expected true or false");
  }
  if (detail::iequals(r.text, "true") || r.text == "1") return true;
  if (detail::iequals(r.text, "false") || r.text == "0") return false;
  bad(r.where, "expected true or false, got '" + std::string(r.text) + "'");
}

struct Field {
  std::string section;  // empty: top level
  std::string key;
  std::function<void(CliConfig&, const Raw&, const fs::path& base)> set;
};

template <class Member>
Field path_field(std::string key, Member member) {
  return {"paths", std::move(key), [member](CliConfig& c, const Raw& r, const fs::path& base) {
            fs::path p = as_string(r);
            c.paths.*member = p.is_relative() && !base.empty() ? base / p : p;
          }};
}

std::vector<Field> fields() {
  std::vector<Field> f;
  f.push_back(path_field("manifest", &PathsConfig::manifest));
  f.push_back(path_field("index", &PathsConfig::index));
  f.push_back(path_field("databases", &PathsConfig::databases));
  f.push_back(path_field("questions", &PathsConfig::questions));
  f.push_back(path_field("few_shots", &PathsConfig::few_shots));

  auto retrieval = [&](std::string key, auto fn) {
    f.push_back({"retrieval", std::move(key), [fn](CliConfig& c, const Raw& r, const fs::path&) { fn(c.retrieval, r); }});
  };
  retrieval("s1", [](RetrievalConfig& c, const Raw& r) {
    c.s1 = as_double(r);
    if (c.s1 < -1 || c.s1 > 1) bad(r.where, "must lie in [-1, 1]");
  });
  retrieval("top_n", [](RetrievalConfig& c, const Raw& r) { c.top_n = as_count(r); });
  retrieval("bm25_prefilter", [](RetrievalConfig& c, const Raw& r) { c.bm25_prefilter = as_bool(r); });
  retrieval("m", [](RetrievalConfig& c, const Raw& r) { c.m = as_count(r); });
  retrieval("k", [](RetrievalConfig& c, const Raw& r) { c.k = as_count(r); });
  retrieval("floor", [](RetrievalConfig& c, const Raw& r) { c.floor = as_double(r); });
  retrieval("weighted", [](RetrievalConfig& c, const Raw& r) { c.weighted = as_bool(r); });

  auto llm = [&](std::string key, auto fn) {
    f.push_back({"llm", std::move(key), fn});
  };
  llm("base_url", [](CliConfig& c, const Raw& r, const fs::path&) { c.llm.base_url = as_string(r); });
  llm("model", [](CliConfig& c, const Raw& r, const fs::path&) { c.llm.model = as_string(r); });
  llm("api_key", [](CliConfig& c, const Raw& r, const fs::path&) { c.llm.api_key = as_string(r); });
  llm("temperature", [](CliConfig& c, const Raw& r, const fs::path&) {
    c.llm.temperature = as_double(r);
    if (c.llm.temperature < 0) bad(r.where, "must be >= 0");
  });
  llm("max_retries", [](CliConfig& c, const Raw& r, const fs::path&) {
    c.llm.max_retries = static_cast<int>(as_count(r));
  });
  llm("mode", [](CliConfig& c, const Raw& r, const fs::path&) {
    try {
      c.llm.mode = parse_llm_mode(as_string(r));
    } catch (const Error&) {
      bad(r.where, "expected live, replay or record");
    }
  });
  llm("fixture", [](CliConfig& c, const Raw& r, const fs::path& base) {
    fs::path p = as_string(r);
    c.llm.fixture = p.is_relative() && !base.empty() ? base / p : p;
  });
  llm("timeout_seconds", [](CliConfig& c, const Raw& r, const fs::path&) {
    c.llm.timeout_seconds = static_cast<int>(as_count(r));
  });

  auto emb = [&](std::string key, auto fn) {
    f.push_back({"embedding", std::move(key), [fn](CliConfig& c, const Raw& r, const fs::path&) { fn(c.embedding, r); }});
  };
  emb("provider", [](EmbeddingConfig& c, const Raw& r) {
    c.provider = detail::to_lower(as_string(r));
    if (c.provider != "trigram" && c.provider != "http") bad(r.where, "expected trigram or http");
  });
  emb("dim", [](EmbeddingConfig& c, const Raw& r) { c.dim = static_cast<int>(as_count(r)); });
  emb("base_url", [](EmbeddingConfig& c, const Raw& r) { c.base_url = as_string(r); });
  emb("model", [](EmbeddingConfig& c, const Raw& r) { c.model = as_string(r); });
  emb("api_key", [](EmbeddingConfig& c, const Raw& r) { c.api_key = as_string(r); });
  emb("timeout_seconds", [](EmbeddingConfig& c, const Raw& r) { c.timeout_seconds = static_cast<int>(as_count(r)); });

  f.push_back({"", "parallelism", [](CliConfig& c, const Raw& r, const fs::path&) {
                 c.parallelism = static_cast<int>(as_count(r));
               }});
  return f;
}

std::string env_name(const Field& f) {
  return "CRED_" + detail::to_upper(f.section.empty() ? f.key : f.section + "_" + f.key);
}

void apply_env(CliConfig& config, const std::vector<Field>& fs, const EnvLookup& env) {
  for (const auto& f : fs) {
    const auto name = env_name(f);
    if (auto v = env(name)) f.set(config, Raw{nullptr, *v, name}, {});
  }
}

}  // namespace

CliConfig parse_config(std::string_view toml_text, const fs::path& base_dir, const EnvLookup& env) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    throw Error(ErrorCode::ConfigError, msg.str());
  }
  const auto fs = fields();
  auto find_field = [&](std::string_view section, std::string_view key) -> const Field* {
    for (const auto& f : fs) {
      if (f.section == section && f.key == key) return &f;
    }
    return nullptr;
  };
  auto is_section = [&](std::string_view name) {
    return std::any_of(fs.begin(), fs.end(), [&](const Field& f) { return !f.section.empty() && f.section == name; });
  };

  CliConfig config;
  for (const auto& [k, node] : root) {
    const std::string key(k.str());
    if (const auto* tbl = node.as_table()) {
      if (!is_section(key)) bad("[" + key + "]", "unknown section");
      for (const auto& [k2, node2] : *tbl) {
        const std::string key2(k2.str());
        const auto* f = find_field(key, key2);
        if (!f) bad(key + "." + key2, "unknown key");
        f->set(config, Raw{&node2, {}, key + "." + key2}, base_dir);
      }
      continue;
    }
    const auto* f = find_field("", key);
    if (!f) bad(key, "unknown key");
    f->set(config, Raw{&node, {}, key}, base_dir);
  }
  apply_env(config, fs, env);
  return config;
}

CliConfig load_config(const fs::path& path, const EnvLookup& env) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "config file not found: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::absolute(path).parent_path(), env);
}

CliConfig default_config(const EnvLookup& env) {
  CliConfig config;
  apply_env(config, fields(), env);
  return config;
}

void require_path(const fs::path& path, std::string_view what) {
  if (path.empty()) throw Error(ErrorCode::ConfigError, std::string(what) + " is not configured");
  if (!fs::exists(path)) throw Error(ErrorCode::ConfigError, std::string(what) + " not found: " + path.string());
}

}  // namespace credsql
