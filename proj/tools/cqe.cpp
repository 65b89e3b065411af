// cqe: command-line front end for the collaborative query expansion engine.
//
//   cqe index <corpus> --out corpus.idx
//   cqe expand <query> [--limit N] [--json]
//   cqe choose <query> <term>
//   cqe eval --uer votes.jsonl --systems runs.jsonl [--json-out report.jsonl]
//   cqe serve [--listen host:port]
//   cqe fixtures record <query>
//
// Shared flags (--config, --graph, --corpus, --provider, --fixtures, ...)
// override the config file; `--set key=value` reaches any config key.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqe/cqe.hpp"

namespace {

struct shared_flags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> settings;
};

void add_setting_flag(CLI::App& app, shared_flags& f, const std::string& flag,
                      const std::string& key, const std::string& help) {
  app.add_option_function<std::string>(
      flag, [&f, key](const std::string& v) { f.settings.emplace_back(key, v); }, help);
}

cqe::app_config resolve_config(const shared_flags& f) {
  cqe::app_config cfg = f.config.empty() ? cqe::app_config{} : cqe::load_config(f.config);
  for (const auto& [k, v] : f.settings) cqe::apply_setting(cfg, k, v);
  cqe::apply_env(cfg);
  return cfg;
}

std::string fmt_num(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

void print_expansion(const nlohmann::ordered_json& body, std::ostream& os) {
  os << "query: " << body["query"].get<std::string>() << "  matched: "
     << body["matched_query"].get<std::string>()
     << (body["exact"].get<bool>() ? " (exact)"
         : body["matched_query"] == body["query"] ? " (new)"
                                                   : " (nearest)")
     << '\n';
  std::size_t tw = 4;
  for (const auto& c : body["candidates"]) tw = std::max(tw, c["term"].get<std::string>().size());
  os << "rank  " << std::left << std::setw(static_cast<int>(tw)) << "term"
     << "  distance   source             pmi      ngd\n";
  int rank = 0;
  for (const auto& c : body["candidates"]) {
    auto comp = [&](const char* k) {
      const auto& v = c["components"][k];
      return v.is_null() ? std::string("-") : fmt_num(v.get<double>(), 4);
    };
    os << std::right << std::setw(4) << ++rank << "  " << std::left
       << std::setw(static_cast<int>(tw)) << c["term"].get<std::string>() << "  "
       << fmt_num(c["distance"].get<double>(), 7) << "  " << std::setw(17)
       << c["source"].get<std::string>() << "  " << std::setw(7) << comp("pmi") << "  "
       << comp("ngd") << '\n';
  }
}

int report(const cqe::api_response& r) {
  if (r.status == 200) return 0;
  std::cerr << "error (" << r.status << "): " << r.body.value("error", "unknown") << '\n';
  return 1;
}

template <typename T>
std::vector<T> read_jsonl_file(const std::string& path,
                               std::vector<T> (*reader)(std::istream&)) {
  std::ifstream is(path);
  if (!is) throw cqe::error("cannot read " + path);
  return reader(is);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative query expansion ranked by PMING distance"};
  app.require_subcommand(1);
  shared_flags flags;
  app.add_option("--config", flags.config, "key = value configuration file");
  add_setting_flag(app, flags, "--graph", "graph", "lexical graph file");
  add_setting_flag(app, flags, "--corpus", "corpus", "corpus path (see --corpus-format)");
  add_setting_flag(app, flags, "--corpus-format", "corpus_format", "dir | records | index");
  add_setting_flag(app, flags, "--pool", "pool", "query pool file");
  add_setting_flag(app, flags, "--provider", "engine.mode", "replay | live | live-with-cache");
  add_setting_flag(app, flags, "--fixtures", "engine.fixtures", "engine fixture directory");
  add_setting_flag(app, flags, "--counts", "counts", "occurrence source for ranking: engine | corpus");
  add_setting_flag(app, flags, "--rho", "rho", "PMING blend weight");
  add_setting_flag(app, flags, "--h-prime", "h_prime", "co-occurrence threshold");
  add_setting_flag(app, flags, "--max-depth", "max_depth", "hierarchical expansion depth");
  add_setting_flag(app, flags, "--direction", "direction", "down | up | both");
  add_setting_flag(app, flags, "--precision", "precision_target", "precision target (reliability cutoff)");
  add_setting_flag(app, flags, "--max-candidates", "max_candidates", "candidate pool size");
  app.add_option_function<std::vector<std::string>>(
         "--set",
         [&flags](const std::vector<std::string>& kvs) {
           for (const auto& kv : kvs) {
             const auto eq = kv.find('=');
             if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
             flags.settings.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
           }
         },
         "override any config key (key=value)")
      ->take_all();

  auto* index_cmd = app.add_subcommand("index", "build and persist a corpus index");
  std::string index_src, index_fmt = "records", index_out;
  index_cmd->add_option("corpus", index_src, "corpus directory or records file")->required();
  index_cmd->add_option("--format", index_fmt, "dir | records")
      ->check(CLI::IsMember({"dir", "records"}));
  index_cmd->add_option("-o,--out", index_out, "index output file")->required();

  auto* expand_cmd = app.add_subcommand("expand", "print ranked expansion candidates");
  std::vector<std::string> expand_words;
  std::size_t limit = 0;
  bool as_json = false;
  std::vector<std::string> source_filter;
  expand_cmd->add_option("query", expand_words, "query text")->required();
  expand_cmd->add_option("--limit", limit, "show at most N candidates");
  expand_cmd->add_option("--source", source_filter, "restrict candidate sources");
  expand_cmd->add_flag("--json", as_json, "print the API response body");

  auto* choose_cmd = app.add_subcommand("choose", "record a user choice for a query");
  std::string choose_query, choose_term;
  choose_cmd->add_option("query", choose_query)->required();
  choose_cmd->add_option("term", choose_term)->required();

  auto* eval_cmd = app.add_subcommand("eval", "compare system rankings with the UER");
  std::string uer_file, json_out;
  std::vector<std::string> system_files;
  eval_cmd->add_option("--uer", uer_file, "voter rankings (JSONL)")->required();
  eval_cmd->add_option("--systems", system_files, "system rankings (JSONL)");
  eval_cmd->add_option("--json-out", json_out, "write JSONL records here");

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP API");
  std::string listen;
  serve_cmd->add_option("--listen", listen, "host:port");

  auto* fixtures_cmd = app.add_subcommand("fixtures", "manage engine replay fixtures");
  fixtures_cmd->require_subcommand(1);
  auto* record_cmd = fixtures_cmd->add_subcommand("record", "capture live counts for a query");
  std::vector<std::string> record_words;
  record_cmd->add_option("query", record_words, "query text")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*index_cmd) {
      const auto docs = index_fmt == "dir" ? cqe::read_corpus_dir(index_src)
                                           : cqe::read_corpus_records(index_src);
      const auto idx = cqe::corpus_index::build(docs);
      idx.save(index_out);
      std::cout << "indexed " << idx.total() << " documents, " << idx.postings().size()
                << " terms -> " << index_out << '\n';
      return 0;
    }

    if (*eval_cmd) {
      const auto votes = read_jsonl_file(uer_file, &cqe::read_voter_rankings);
      std::vector<cqe::named_ranking> systems;
      for (const auto& f : system_files)
        for (auto& s : read_jsonl_file(f, &cqe::read_named_rankings)) systems.push_back(std::move(s));
      const auto rep = cqe::compare_report(cqe::aggregate_uer(votes), systems);
      std::cout << cqe::render_text(rep);
      if (!json_out.empty()) {
        std::ofstream os(json_out);
        if (!os) throw cqe::error("cannot write " + json_out);
        os << cqe::render_json(rep);
      }
      return 0;
    }

    auto cfg = resolve_config(flags);

    if (*expand_cmd) {
      cqe::expansion_service svc(cfg);
      nlohmann::json req{{"query", cqe::join(expand_words)}};
      if (limit) req["limit"] = limit;
      if (!source_filter.empty()) req["source_filter"] = source_filter;
      const auto res = svc.expand(req);
      if (res.status == 200) {
        for (const auto& w : res.body["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
        if (as_json) std::cout << res.body.dump(2) << '\n';
        else print_expansion(res.body, std::cout);
      }
      return report(res);
    }

    if (*choose_cmd) {
      cqe::expansion_service svc(cfg);
      const auto res = svc.choose({{"query", choose_query}, {"term", choose_term}});
      if (res.status == 200) std::cout << res.body["entry"].dump() << '\n';
      return report(res);
    }

    if (*serve_cmd) {
      if (!listen.empty()) cfg.listen = listen;
      const auto colon = cfg.listen.rfind(':');
      if (colon == std::string::npos) throw cqe::config_error("listen must be host:port");
      const std::string host = cfg.listen.substr(0, colon);
      const int port = std::stoi(cfg.listen.substr(colon + 1));
      cqe::expansion_service svc(cfg);
      httplib::Server server;
      cqe::bind_routes(server, svc);
      std::cout << "listening on " << host << ':' << port << std::endl;
      if (!server.listen(host, port)) throw cqe::error("cannot listen on " + cfg.listen);
      return 0;
    }

    if (*record_cmd) {
      if (!cfg.engine_enabled || cfg.engine.fixtures_dir.empty())
        throw cqe::config_error("fixtures record needs an engine endpoint and --fixtures");
      cfg.engine.mode = cqe::engine_mode::live_with_cache;
      cfg.counts = "engine";
      cqe::expansion_service svc(cfg);
      const auto res = svc.expand({{"query", cqe::join(record_words)}});
      if (res.status == 200) {
        for (const auto& w : res.body["warnings"]) std::cerr << "warning: " << w.get<std::string>() << '\n';
        std::cout << "recorded " << svc.engine()->request_count() << " engine responses into "
                  << cfg.engine.fixtures_dir.string() << '\n';
      }
      return report(res);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
