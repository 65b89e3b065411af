#pragma once

// Application configuration: a `key = value` file, `#` comments, relative
// paths resolved against the file's directory. ENGINE_API_KEY in the
// environment overrides engine.api_key.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "cqe/engine_client.hpp"
#include "cqe/error.hpp"
#include "cqe/lexical_graph.hpp"
#include "cqe/measures.hpp"
#include "cqe/query_pool.hpp"
#include "cqe/text.hpp"

namespace cqe {

enum class corpus_format { dir, records, index };

inline corpus_format parse_corpus_format(std::string_view s) {
  if (s == "dir") return corpus_format::dir;
  if (s == "records") return corpus_format::records;
  if (s == "index") return corpus_format::index;
  throw config_error("unknown corpus format: " + std::string(s));
}

struct app_config {
  std::filesystem::path corpus;
  corpus_format corpus_kind = corpus_format::records;
  std::filesystem::path graph;
  std::filesystem::path pool;
  bool engine_enabled = false;
  engine_config engine;
  std::string counts;  // "engine" or "corpus"; empty picks engine when enabled
  double rho = default_rho;
  double epsilon = default_epsilon;
  pool_limits limits;
  expansion_policy policy;
  std::string listen = "127.0.0.1:8080";

  bool use_engine_counts() const {
    if (counts.empty()) return engine_enabled;
    return counts == "engine";
  }

  void validate() const {
    if (!engine_enabled && corpus.empty())
      throw config_error("no occurrence source: configure a corpus or an engine");
    if (!counts.empty() && counts != "engine" && counts != "corpus")
      throw config_error("counts must be 'engine' or 'corpus'");
    if (counts == "engine" && !engine_enabled)
      throw config_error("counts=engine but no engine configured");
    if (counts == "corpus" && corpus.empty())
      throw config_error("counts=corpus but no corpus configured");
    if (!(rho >= 0.0 && rho <= 1.0)) throw config_error("rho must lie in [0, 1]");
    if (policy.max_depth < 1) throw config_error("max_depth must be positive");
  }
};

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw config_error("'" + key + "' expects a number, got '" + v + "'");
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    auto n = std::stoull(v, &used);
    if (used == v.size() && v.find('-') == std::string::npos) return n;
  } catch (const std::exception&) {
  }
  throw config_error("'" + key + "' expects a non-negative integer, got '" + v + "'");
}

}  // namespace detail

// Applies one setting. Unknown keys are rejected.
inline void apply_setting(app_config& c, const std::string& key, const std::string& value,
                          const std::filesystem::path& base = {}) {
  auto path = [&] {
    std::filesystem::path p(value);
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  auto engine = [&]() -> engine_config& {
    c.engine_enabled = true;
    return c.engine;
  };
  if (key == "corpus") c.corpus = path();
  else if (key == "corpus_format") c.corpus_kind = parse_corpus_format(value);
  else if (key == "graph") c.graph = path();
  else if (key == "pool") c.pool = path();
  else if (key == "counts") c.counts = value;
  else if (key == "rho") c.rho = detail::to_double(key, value);
  else if (key == "epsilon") c.epsilon = detail::to_double(key, value);
  else if (key == "h_prime") c.limits.h_prime = detail::to_double(key, value);
  else if (key == "max_candidates") c.limits.max_candidates = detail::to_uint(key, value);
  else if (key == "max_suggestions") c.limits.max_suggestions = detail::to_uint(key, value);
  else if (key == "max_depth") c.policy.max_depth = static_cast<int>(detail::to_uint(key, value));
  else if (key == "direction") c.policy.dir = parse_direction(value);
  else if (key == "precision_target") c.policy.precision_target = detail::to_double(key, value);
  else if (key == "r_threshold") c.policy.r_threshold = detail::to_double(key, value);
  else if (key == "relations") {
    c.policy.relations.clear();
    std::stringstream ss(value);
    std::string r;
    while (std::getline(ss, r, ',')) {
      auto rel = parse_relation(trim(r));
      if (!rel) throw config_error("unknown relation '" + r + "'");
      c.policy.relations.insert(*rel);
    }
  } else if (key == "listen") c.listen = value;
  else if (key == "engine.mode") engine().mode = parse_engine_mode(value);
  else if (key == "engine.fixtures") engine().fixtures_dir = path();
  else if (key == "engine.count_endpoint") engine().count_endpoint = value;
  else if (key == "engine.suggest_endpoint") engine().suggest_endpoint = value;
  else if (key == "engine.api_key") engine().api_key = value;
  else if (key == "engine.auth_header") engine().auth_header = value;
  else if (key == "engine.query_param") engine().query_param = value;
  else if (key == "engine.count_path") engine().count_path = value;
  else if (key == "engine.suggest_path") engine().suggest_path = value;
  else if (key == "engine.suggest_field") engine().suggest_field = value;
  else if (key == "engine.m_estimate") engine().M_estimate = detail::to_uint(key, value);
  else if (key == "engine.rate_limit") engine().rate_limit = detail::to_double(key, value);
  else if (key == "engine.timeout_ms")
    engine().timeout = std::chrono::milliseconds(detail::to_uint(key, value));
  else throw config_error("unknown setting '" + key + "'");
}

inline void apply_env(app_config& c) {
  if (const char* k = std::getenv("ENGINE_API_KEY"); k && *k) c.engine.api_key = k;
}

inline app_config parse_config(std::istream& is, const std::filesystem::path& base = {}) {
  app_config c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw parse_error("expected key = value", lineno);
    try {
      apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base);
    } catch (const config_error& e) {
      throw parse_error(e.what(), lineno);
    }
  }
  apply_env(c);
  return c;
}

inline app_config load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read config: " + path.string());
  return parse_config(is, path.parent_path());
}

}  // namespace cqe
