#pragma once

// The evolutionary query memory: normalized queries, the candidate terms
// users picked for them, and candidate pool assembly from every source.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cqe/clock.hpp"
#include "cqe/corpus_index.hpp"
#include "cqe/engine_client.hpp"
#include "cqe/error.hpp"
#include "cqe/lexical_graph.hpp"
#include "cqe/text.hpp"

namespace cqe {

struct query_key {
  std::vector<std::string> tokens;
  std::string canonical;

  friend bool operator==(const query_key&, const query_key&) = default;
};

inline query_key normalize_query(std::string_view raw) {
  query_key k{tokenize(raw), {}};
  if (k.tokens.empty()) throw domain_error("empty query");
  k.canonical = join(k.tokens);
  return k;
}

struct query_pool_entry {
  query_key key;
  std::map<std::string, std::uint64_t> choices;
  std::string created_at;
  std::string updated_at;

  friend bool operator==(const query_pool_entry&, const query_pool_entry&) = default;
};

// Listed from highest to lowest dedup precedence.
enum class candidate_source { pool_learned, lexical_graph, cooccurrence, engine_suggestion };

inline std::string to_string(candidate_source s) {
  switch (s) {
    case candidate_source::pool_learned: return "pool_learned";
    case candidate_source::lexical_graph: return "lexical_graph";
    case candidate_source::cooccurrence: return "cooccurrence";
    case candidate_source::engine_suggestion: return "engine_suggestion";
  }
  return "?";
}

inline candidate_source parse_candidate_source(std::string_view s) {
  for (auto c : {candidate_source::pool_learned, candidate_source::lexical_graph,
                 candidate_source::cooccurrence, candidate_source::engine_suggestion})
    if (to_string(c) == s) return c;
  throw domain_error("unknown candidate source: " + std::string(s));
}

inline double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t common = 0;
  for (const auto& t : sa) common += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - common;
  return uni ? static_cast<double>(common) / static_cast<double>(uni) : 0.0;
}

inline nlohmann::ordered_json to_json(const query_pool_entry& e) {
  nlohmann::ordered_json choices = nlohmann::ordered_json::object();
  for (const auto& [term, n] : e.choices) choices[term] = n;
  return {{"canonical", e.key.canonical},
          {"choices", std::move(choices)},
          {"created_at", e.created_at},
          {"updated_at", e.updated_at}};
}

struct match_result {
  query_pool_entry entry;
  bool exact = false;
};

// Pool of past queries. Reads may run concurrently; writers are serialized
// and every write reaches disk (temp file + rename) before returning.
class query_pool {
 public:
  explicit query_pool(std::filesystem::path path = {}, clock_fn now = utc_timestamp)
      : path_(std::move(path)), now_(std::move(now)) {
    if (!path_.empty() && std::filesystem::exists(path_)) {
      std::ifstream is(path_);
      if (!is) throw error("cannot read pool: " + path_.string());
      read(is);
    }
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

  std::optional<query_pool_entry> find(const std::string& canonical) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(canonical);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<query_pool_entry> entries() const {
    std::shared_lock lock(mu_);
    std::vector<query_pool_entry> out;
    for (const auto& [_, e] : entries_) out.push_back(e);
    return out;
  }

  // Read-only lookup: the exact entry if present, otherwise the nearest one
  // by token-set Jaccard (ties go to the lexicographically smallest
  // canonical form). nullopt when nothing shares a token with the query.
  std::optional<match_result> peek(const query_key& key) const {
    std::shared_lock lock(mu_);
    return nearest(key);
  }

  // Exact hit: (entry, true). Otherwise the query is recorded as a fresh
  // entry and the nearest pre-existing entry is returned with exact=false;
  // the fresh entry itself when nothing overlaps.
  match_result match_query(const query_key& key) {
    std::unique_lock lock(mu_);
    auto found = nearest(key);
    if (found && found->exact) return *found;
    const auto stamp = now_();
    query_pool_entry fresh{key, {}, stamp, stamp};
    entries_.emplace(key.canonical, fresh);
    persist_locked();
    if (found) return *found;
    return {std::move(fresh), false};
  }

  query_pool_entry record_choice(const query_key& key, std::string_view chosen) {
    const auto term = normalize_term(chosen);
    if (term.empty()) throw domain_error("empty choice");
    std::unique_lock lock(mu_);
    auto it = entries_.find(key.canonical);
    if (it == entries_.end()) throw domain_error("query not in pool: " + key.canonical);
    ++it->second.choices[term];
    it->second.updated_at = now_();
    persist_locked();
    return it->second;
  }

  // One JSON object per line, sorted by canonical query.
  void write(std::ostream& os) const {
    std::shared_lock lock(mu_);
    write_locked(os);
  }

  std::string serialize() const {
    std::ostringstream ss;
    write(ss);
    return ss.str();
  }

  void save() const {
    std::unique_lock lock(mu_);
    persist_locked();
  }

 private:
  std::optional<match_result> nearest(const query_key& key) const {
    if (auto it = entries_.find(key.canonical); it != entries_.end())
      return match_result{it->second, true};
    double best = 0.0;
    const query_pool_entry* pick = nullptr;
    for (const auto& [_, e] : entries_) {
      const double s = jaccard(key.tokens, e.key.tokens);
      if (s > best) {
        best = s;
        pick = &e;
      }
    }
    if (!pick) return std::nullopt;
    return match_result{*pick, false};
  }

  void write_locked(std::ostream& os) const {
    for (const auto& [_, e] : entries_) os << to_json(e).dump() << '\n';
  }

  void persist_locked() const {
    if (path_.empty()) return;
    auto tmp = path_;
    tmp += ".tmp";
    {
      std::ofstream os(tmp, std::ios::trunc);
      if (!os) throw error("cannot write pool: " + tmp.string());
      write_locked(os);
      os.flush();
      if (!os) throw error("short write on pool: " + tmp.string());
    }
    std::filesystem::rename(tmp, path_);
  }

  void read(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        query_pool_entry e;
        e.key = normalize_query(j.at("canonical").get<std::string>());
        for (const auto& [term, n] : j.at("choices").items())
          e.choices[term] = n.get<std::uint64_t>();
        e.created_at = j.value("created_at", "");
        e.updated_at = j.value("updated_at", "");
        entries_[e.key.canonical] = std::move(e);
      } catch (const parse_error&) {
        throw;
      } catch (const std::exception& ex) {
        throw parse_error(std::string("pool file: ") + ex.what(), lineno);
      }
    }
  }

  std::filesystem::path path_;
  clock_fn now_;
  mutable std::shared_mutex mu_;
  std::map<std::string, query_pool_entry> entries_;
};

struct cooccurrence_candidate {
  std::string term;
  double probability = 0.0;
};

// Terms v (not among the seeds) with P(v | all seeds) >= h_prime. Without an
// explicit vocabulary, the terms co-occurring with the seeds are scanned.
inline std::vector<cooccurrence_candidate> expand_cooccurrence(
    const corpus_index& index, const std::vector<std::string>& seeds,
    std::optional<std::vector<std::string>> vocabulary, double h_prime) {
  std::vector<std::string> seed_tokens;
  for (const auto& s : seeds)
    for (auto& t : tokenize(s)) seed_tokens.push_back(std::move(t));
  if (index.support(seed_tokens).empty()) throw domain_error("zero-support condition");
  const auto vocab = vocabulary ? std::move(*vocabulary) : index.cooccurring_terms(seeds);
  std::set<std::string> seed_terms;
  for (const auto& s : seeds) seed_terms.insert(normalize_term(s));
  std::vector<cooccurrence_candidate> out;
  std::set<std::string> seen;
  for (const auto& v : vocab) {
    const auto term = normalize_term(v);
    if (term.empty() || seed_terms.count(term) || !seen.insert(term).second) continue;
    const double p = index.cond_prob(term, seeds);
    if (p >= h_prime) out.push_back({term, p});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.term < b.term;
  });
  return out;
}

struct pool_candidate {
  std::string term;
  candidate_source source;

  friend bool operator==(const pool_candidate&, const pool_candidate&) = default;
};

struct candidate_sources {
  const lexical_graph* graph = nullptr;
  const engine_client* engine = nullptr;
  const corpus_index* index = nullptr;
  const query_pool_entry* learned = nullptr;  // matched pool entry
};

struct pool_limits {
  std::size_t max_candidates = 20;
  std::size_t max_suggestions = 10;
  double h_prime = 0.3;
};

struct candidate_pool {
  std::vector<pool_candidate> candidates;
  std::vector<std::string> warnings;
};

// Union of every configured source, deduplicated by normalized term with
// precedence pool_learned > lexical_graph > cooccurrence > engine_suggestion.
// Seed tokens are stripped from every candidate. A failing source is
// reported in `warnings`; an empty result raises pool_empty_error.
inline candidate_pool build_candidate_pool(const query_key& seed,
                                           const candidate_sources& src,
                                           const expansion_policy& policy,
                                           const pool_limits& limits) {
  candidate_pool result;
  std::vector<std::pair<candidate_source, std::vector<std::string>>> raw;
  std::vector<std::string> causes;
  auto run = [&](candidate_source s, auto&& produce) {
    try {
      auto terms = produce();
      if (terms.empty()) causes.push_back(to_string(s) + ": no candidates");
      raw.emplace_back(s, std::move(terms));
    } catch (const std::exception& e) {
      causes.push_back(to_string(s) + ": " + e.what());
      result.warnings.push_back(to_string(s) + " failed: " + e.what());
    }
  };

  if (src.learned) {
    run(candidate_source::pool_learned, [&] {
      std::vector<std::pair<std::string, std::uint64_t>> picks(src.learned->choices.begin(),
                                                               src.learned->choices.end());
      std::stable_sort(picks.begin(), picks.end(),
                       [](auto& a, auto& b) { return a.second > b.second; });
      std::vector<std::string> terms;
      for (auto& [t, n] : picks)
        if (n >= 1) terms.push_back(t);
      return terms;
    });
  }
  if (src.graph) {
    run(candidate_source::lexical_graph, [&] {
      std::vector<std::string> terms;
      for (auto& t : src.graph->expand_hierarchical(seed.canonical, policy))
        terms.push_back(std::move(t.term));
      return terms;
    });
  }
  if (src.index) {
    run(candidate_source::cooccurrence, [&] {
      std::vector<std::string> terms;
      for (auto& c : expand_cooccurrence(*src.index, seed.tokens, std::nullopt, limits.h_prime))
        terms.push_back(std::move(c.term));
      return terms;
    });
  }
  if (src.engine) {
    run(candidate_source::engine_suggestion, [&] {
      return src.engine->fetch_suggestions(seed.canonical, limits.max_suggestions);
    });
  }

  const std::set<std::string> seed_tokens(seed.tokens.begin(), seed.tokens.end());
  std::stable_sort(raw.begin(), raw.end(),
                   [](auto& a, auto& b) { return a.first < b.first; });
  std::set<std::string> seen;
  for (auto& [source, terms] : raw) {
    for (const auto& t : terms) {
      std::vector<std::string> kept;
      for (auto& tok : tokenize(t))
        if (!seed_tokens.count(tok)) kept.push_back(std::move(tok));
      if (kept.empty()) continue;
      auto term = join(kept);
      if (!seen.insert(term).second) continue;
      result.candidates.push_back({std::move(term), source});
    }
  }
  if (result.candidates.empty()) {
    std::string msg = "no expansion candidates";
    if (causes.empty()) causes.push_back("no candidate source configured");
    for (const auto& c : causes) msg += "; " + c;
    throw pool_empty_error(msg);
  }
  if (result.candidates.size() > limits.max_candidates)
    result.candidates.resize(limits.max_candidates);
  return result;
}

}  // namespace cqe
