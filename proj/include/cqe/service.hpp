#pragma once

// The expansion pipeline behind the HTTP API: normalize, match against the
// pool, assemble candidates, rank by PMING. Handlers take and return JSON so
// they can be exercised without a socket; bind_routes() wires them to an
// httplib server.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "cqe/config.hpp"
#include "cqe/corpus_index.hpp"
#include "cqe/engine_client.hpp"
#include "cqe/lexical_graph.hpp"
#include "cqe/query_pool.hpp"
#include "cqe/ranker_eval.hpp"

namespace cqe {

struct api_response {
  int status = 200;
  nlohmann::ordered_json body;
};

inline nlohmann::ordered_json to_json(const ranked_candidate& c,
                                      const std::string& matched) {
  return {{"term", c.term},
          {"distance", c.distance},
          {"source", to_string(c.source)},
          {"components", {{"pmi", json_number(c.pmi)}, {"ngd", json_number(c.ngd)}}},
          {"expanded_query", matched + " " + c.term}};
}

class expansion_service {
 public:
  explicit expansion_service(app_config cfg,
                             std::shared_ptr<http_transport> transport = nullptr,
                             clock_fn now = utc_timestamp)
      : cfg_(std::move(cfg)), pool_(cfg_.pool, now) {
    cfg_.validate();
    if (!cfg_.graph.empty()) graph_ = lexical_graph::load(cfg_.graph);
    if (!cfg_.corpus.empty()) {
      switch (cfg_.corpus_kind) {
        case corpus_format::index: index_ = corpus_index::load(cfg_.corpus); break;
        case corpus_format::dir: index_ = corpus_index::build(read_corpus_dir(cfg_.corpus)); break;
        case corpus_format::records:
          index_ = corpus_index::build(read_corpus_records(cfg_.corpus));
          break;
      }
    }
    if (cfg_.engine_enabled)
      engine_ = std::make_unique<engine_client>(cfg_.engine, std::move(transport), now);
  }

  const app_config& config() const noexcept { return cfg_; }
  query_pool& pool() noexcept { return pool_; }
  const engine_client* engine() const noexcept { return engine_.get(); }
  const corpus_index* index() const noexcept { return index_ ? &*index_ : nullptr; }

  // {query, source_filter?, limit?} -> {query, matched_query, exact,
  // candidates, warnings}. Matching here never writes to the pool.
  api_response expand(const nlohmann::json& req) const {
    if (!req.is_object() || !req.contains("query") || !req["query"].is_string())
      return fail(400, "field 'query' (string) is required");
    query_key key;
    try {
      key = normalize_query(req["query"].get<std::string>());
    } catch (const domain_error& e) {
      return fail(400, std::string("invalid query: ") + e.what());
    }
    std::optional<std::size_t> limit;
    if (req.contains("limit")) {
      const auto& l = req["limit"];
      if (!l.is_number_integer() || l.get<std::int64_t>() < 1)
        return fail(400, "'limit' must be a positive integer");
      limit = l.get<std::size_t>();
    }
    std::set<candidate_source> allowed{candidate_source::pool_learned,
                                       candidate_source::lexical_graph,
                                       candidate_source::cooccurrence,
                                       candidate_source::engine_suggestion};
    if (req.contains("source_filter") && !req["source_filter"].is_null()) {
      allowed.clear();
      try {
        const auto& f = req["source_filter"];
        if (f.is_string()) allowed.insert(parse_candidate_source(f.get<std::string>()));
        else
          for (const auto& s : f) allowed.insert(parse_candidate_source(s.get<std::string>()));
      } catch (const std::exception& e) {
        return fail(400, std::string("invalid source_filter: ") + e.what());
      }
    }

    const auto match = pool_.peek(key);
    const query_key matched = match ? match->entry.key : key;
    const bool exact = match && match->exact;

    candidate_sources src;
    if (match && allowed.count(candidate_source::pool_learned)) src.learned = &match->entry;
    if (graph_ && allowed.count(candidate_source::lexical_graph)) src.graph = &*graph_;
    if (index_ && allowed.count(candidate_source::cooccurrence)) src.index = &*index_;
    if (engine_ && allowed.count(candidate_source::engine_suggestion)) src.engine = engine_.get();

    try {
      auto pool = build_candidate_pool(matched, src, cfg_.policy, cfg_.limits);
      auto ranked = rank_candidates(matched, pool.candidates, counts(), cfg_.rho, cfg_.epsilon);
      if (limit && ranked.candidates.size() > *limit) ranked.candidates.resize(*limit);
      nlohmann::ordered_json cands = nlohmann::ordered_json::array();
      for (const auto& c : ranked.candidates) cands.push_back(to_json(c, matched.canonical));
      nlohmann::ordered_json warnings = pool.warnings;
      for (auto& w : ranked.warnings) warnings.push_back(w);
      return {200,
              {{"query", key.canonical},
               {"matched_query", matched.canonical},
               {"exact", exact},
               {"candidates", std::move(cands)},
               {"warnings", std::move(warnings)}}};
    } catch (const pool_empty_error& e) {
      return fail(404, e.what());
    } catch (const ranking_empty_error& e) {
      return fail(502, e.what());
    } catch (const transport_error& e) {
      return fail(502, e.what());
    } catch (const error& e) {
      return fail(500, e.what());
    }
  }

  // {query, term} -> {entry}. An unseen query is recorded first.
  api_response choose(const nlohmann::json& req) {
    if (!req.is_object() || !req.contains("query") || !req["query"].is_string())
      return fail(400, "field 'query' (string) is required");
    if (!req.contains("term") || !req["term"].is_string())
      return fail(400, "field 'term' (string) is required");
    try {
      const auto key = normalize_query(req["query"].get<std::string>());
      const auto term = normalize_term(req["term"].get<std::string>());
      if (term.empty()) return fail(400, "empty term");
      if (!pool_.find(key.canonical)) pool_.match_query(key);
      const auto entry = pool_.record_choice(key, term);
      return {200, {{"entry", to_json(entry)}}};
    } catch (const domain_error& e) {
      return fail(400, e.what());
    } catch (const error& e) {
      return fail(500, e.what());
    }
  }

  api_response pool_snapshot() const {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const auto& e : pool_.entries()) entries.push_back(to_json(e));
    return {200, {{"entries", std::move(entries)}}};
  }

  api_response health() const {
    return {200,
            {{"status", "ok"},
             {"graph", graph_.has_value()},
             {"corpus", index_.has_value()},
             {"engine", engine_ ? to_string(engine_->config().mode) : "off"},
             {"counts", cfg_.use_engine_counts() ? "engine" : "corpus"}}};
  }

 private:
  static api_response fail(int status, const std::string& msg) {
    return {status, {{"error", msg}}};
  }

  const occurrence_source& counts() const {
    if (cfg_.use_engine_counts()) return *engine_;
    return *index_;
  }

  app_config cfg_;
  query_pool pool_;
  std::optional<lexical_graph> graph_;
  std::optional<corpus_index> index_;
  std::unique_ptr<engine_client> engine_;
};

inline void bind_routes(httplib::Server& server, expansion_service& svc) {
  auto reply = [](httplib::Response& res, const api_response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto with_body = [reply](auto handler) {
    return [reply, handler](const httplib::Request& req, httplib::Response& res) {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const std::exception&) {
        reply(res, {400, {{"error", "request body is not valid JSON"}}});
        return;
      }
      reply(res, handler(body));
    };
  };
  server.Post("/api/expand",
              with_body([&svc](const nlohmann::json& b) { return svc.expand(b); }));
  server.Post("/api/choose",
              with_body([&svc](const nlohmann::json& b) { return svc.choose(b); }));
  server.Get("/api/pool", [&svc, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.pool_snapshot());
  });
  server.Get("/api/health", [&svc, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, svc.health());
  });
}

}  // namespace cqe
