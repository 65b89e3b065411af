#pragma once

// WordNet-style taxonomy: synsets joined by is_a and part_of edges, each edge
// carrying a traversal probability t (child given parent) and a reliability
// factor r for the subtree it leads into.
//
// File format, one record per line, `#` starts a comment:
//   S <id> <pos> <lemma,lemma,...> [gloss...]
//   E <parent-id> <child-id> <is_a|part_of> [t] [r]
// Underscores in lemmas stand for spaces. A missing t defaults to
// 1 / out-degree(parent); a missing r to 0.9 (is_a) or 0.6 (part_of).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cqe/error.hpp"
#include "cqe/text.hpp"

namespace cqe {

enum class part_of_speech { noun, verb, adjective, adverb };
enum class relation { is_a, part_of };
enum class direction { down, up, both };

inline std::optional<part_of_speech> parse_pos(std::string_view s) {
  if (s == "noun" || s == "n") return part_of_speech::noun;
  if (s == "verb" || s == "v") return part_of_speech::verb;
  if (s == "adjective" || s == "adj" || s == "a" || s == "s")
    return part_of_speech::adjective;
  if (s == "adverb" || s == "adv" || s == "r") return part_of_speech::adverb;
  return std::nullopt;
}

inline std::optional<relation> parse_relation(std::string_view s) {
  if (s == "is_a") return relation::is_a;
  if (s == "part_of") return relation::part_of;
  return std::nullopt;
}

inline std::string to_string(relation r) {
  return r == relation::is_a ? "is_a" : "part_of";
}

inline direction parse_direction(std::string_view s) {
  if (s == "down") return direction::down;
  if (s == "up") return direction::up;
  if (s == "both") return direction::both;
  throw config_error("unknown traversal direction: " + std::string(s));
}

struct synset {
  std::string id;
  std::vector<std::string> lemmas;  // normalized
  part_of_speech pos = part_of_speech::noun;
  std::string gloss;
};

struct lex_edge {
  std::string parent;
  std::string child;
  relation rel = relation::is_a;
  double t = 1.0;
  double r = 0.9;
};

struct expansion_policy {
  int max_depth = 2;
  direction dir = direction::down;
  // Precision target. The reliability cutoff follows it one to one unless
  // r_threshold is set explicitly.
  double precision_target = 0.5;
  std::optional<double> r_threshold;
  std::set<relation> relations{relation::is_a, relation::part_of};

  double reliability_cutoff() const {
    return r_threshold.value_or(precision_target);
  }
};

struct expanded_term {
  std::string term;
  int depth = 0;
  double path_probability = 0.0;

  friend bool operator==(const expanded_term&, const expanded_term&) = default;
};

class lexical_graph {
 public:
  lexical_graph() = default;

  // Builds and validates a graph. Edges with no t get 1/out-degree of their
  // parent; edges with no r get the per-relation default.
  static lexical_graph from_parts(std::vector<synset> synsets,
                                  std::vector<lex_edge> edges,
                                  std::vector<bool> has_t = {},
                                  std::vector<bool> has_r = {}) {
    lexical_graph g;
    for (std::size_t i = 0; i < synsets.size(); ++i) {
      auto& s = synsets[i];
      if (s.id.empty()) throw parse_error("synset with empty id");
      if (s.lemmas.empty()) throw parse_error("synset " + s.id + " has no lemmas");
      if (!g.by_id_.emplace(s.id, i).second)
        throw parse_error("duplicate synset id: " + s.id);
    }
    g.synsets_ = std::move(synsets);
    for (std::size_t i = 0; i < g.synsets_.size(); ++i)
      for (const auto& l : g.synsets_[i].lemmas) g.by_lemma_[l].push_back(i);

    has_t.resize(edges.size(), true);
    has_r.resize(edges.size(), true);
    std::unordered_map<std::string, std::size_t> out_degree;
    for (const auto& e : edges) ++out_degree[e.parent];
    for (std::size_t i = 0; i < edges.size(); ++i) {
      auto& e = edges[i];
      for (const auto* id : {&e.parent, &e.child})
        if (!g.by_id_.count(*id)) throw domain_error("dangling synset id: " + *id);
      if (e.parent == e.child) throw domain_error("self-loop on " + e.parent);
      if (!has_t[i]) e.t = 1.0 / static_cast<double>(out_degree[e.parent]);
      if (!has_r[i]) e.r = e.rel == relation::is_a ? 0.9 : 0.6;
      if (!(e.t >= 0.0 && e.t <= 1.0))
        throw domain_error("traversal probability outside [0,1] on " + e.parent +
                           "->" + e.child);
      if (!(e.r > 0.0 && e.r < 1.0))
        throw domain_error("reliability outside (0,1) on " + e.parent + "->" +
                           e.child);
    }
    g.edges_ = std::move(edges);
    g.children_.assign(g.synsets_.size(), {});
    g.parents_.assign(g.synsets_.size(), {});
    for (std::size_t i = 0; i < g.edges_.size(); ++i) {
      g.children_[g.by_id_.at(g.edges_[i].parent)].push_back(i);
      g.parents_[g.by_id_.at(g.edges_[i].child)].push_back(i);
    }
    g.check_acyclic();
    return g;
  }

  static lexical_graph parse(std::istream& is) {
    std::vector<synset> synsets;
    std::vector<lex_edge> edges;
    std::vector<bool> has_t, has_r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      std::istringstream ss(line);
      std::string kind;
      if (!(ss >> kind)) continue;
      if (kind == "S") {
        synset s;
        std::string pos, lemmas;
        if (!(ss >> s.id >> pos >> lemmas))
          throw parse_error("S record needs <id> <pos> <lemmas>", lineno);
        auto p = parse_pos(pos);
        if (!p) throw parse_error("unknown part of speech '" + pos + "'", lineno);
        s.pos = *p;
        std::stringstream ls(lemmas);
        std::string lemma;
        while (std::getline(ls, lemma, ',')) {
          std::replace(lemma.begin(), lemma.end(), '_', ' ');
          if (auto n = normalize_term(lemma); !n.empty()) s.lemmas.push_back(n);
        }
        if (s.lemmas.empty()) throw parse_error("synset without lemmas", lineno);
        std::getline(ss, s.gloss);
        s.gloss = trim(s.gloss);
        synsets.push_back(std::move(s));
      } else if (kind == "E") {
        lex_edge e;
        std::string rel;
        if (!(ss >> e.parent >> e.child >> rel))
          throw parse_error("E record needs <parent> <child> <relation>", lineno);
        auto r = parse_relation(rel);
        if (!r) throw parse_error("unknown relation '" + rel + "'", lineno);
        e.rel = *r;
        std::string tok;
        bool t_given = false, r_given = false;
        if (ss >> tok) {
          e.t = parse_number(tok, lineno);
          t_given = true;
          if (ss >> tok) {
            e.r = parse_number(tok, lineno);
            r_given = true;
          }
        }
        if (ss >> tok) throw parse_error("trailing fields in E record", lineno);
        edges.push_back(std::move(e));
        has_t.push_back(t_given);
        has_r.push_back(r_given);
      } else {
        throw parse_error("unknown record kind '" + kind + "'", lineno);
      }
    }
    return from_parts(std::move(synsets), std::move(edges), std::move(has_t),
                      std::move(has_r));
  }

  static lexical_graph load(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw error("cannot read graph: " + path.string());
    return parse(is);
  }

  const std::vector<synset>& synsets() const noexcept { return synsets_; }
  const std::vector<lex_edge>& edges() const noexcept { return edges_; }

  bool contains(std::string_view id) const { return by_id_.count(std::string(id)) > 0; }

  const synset& at(std::string_view id) const { return synsets_[index_of(id)]; }

  std::size_t noun_count() const {
    return static_cast<std::size_t>(std::count_if(
        synsets_.begin(), synsets_.end(),
        [](const synset& s) { return s.pos == part_of_speech::noun; }));
  }

  // Every synset carrying `word` as a lemma.
  std::set<std::string> senses(std::string_view word) const {
    std::set<std::string> out;
    auto it = by_lemma_.find(normalize_term(word));
    if (it == by_lemma_.end()) return out;
    for (auto i : it->second) out.insert(synsets_[i].id);
    return out;
  }

  // The node itself plus everything above it along is_a edges.
  std::set<std::string> ancestors(std::string_view id) const {
    std::set<std::string> out;
    std::vector<std::size_t> stack{index_of(id)};
    while (!stack.empty()) {
      auto n = stack.back();
      stack.pop_back();
      if (!out.insert(synsets_[n].id).second) continue;
      for (auto e : parents_[n])
        if (edges_[e].rel == relation::is_a) stack.push_back(by_id_.at(edges_[e].parent));
    }
    return out;
  }

  // Concepts subsuming both c1 and c2.
  std::set<std::string> subsumers(std::string_view c1, std::string_view c2) const {
    const auto a = ancestors(c1);
    const auto b = ancestors(c2);
    std::set<std::string> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::inserter(out, out.end()));
    return out;
  }

  // |subsumers(c1, c2)| / (number of noun synsets).
  double wordnet_distance(std::string_view c1, std::string_view c2) const {
    const auto s = subsumers(c1, c2);
    const auto n = noun_count();
    if (n == 0) throw domain_error("graph has no noun synsets");
    return static_cast<double>(s.size()) / static_cast<double>(n);
  }

  // Walks out from every sense of `seed`. Each reachable term is reported
  // once, with the smallest depth and the largest product of t over any
  // admissible path of at most max_depth edges. Edges whose r is below the
  // policy's cutoff are never crossed, which removes the whole subtree
  // behind them.
  std::vector<expanded_term> expand_hierarchical(std::string_view seed,
                                                 const expansion_policy& policy) const {
    const auto seed_norm = normalize_term(seed);
    const auto starts = senses(seed_norm);
    if (starts.empty() || policy.max_depth < 1) return {};
    const double cutoff = policy.reliability_cutoff();
    const bool go_down = policy.dir != direction::up;
    const bool go_up = policy.dir != direction::down;

    constexpr double unreached = -1.0;
    const std::size_t n = synsets_.size();
    std::vector<double> frontier(n, unreached), best(n, unreached);
    std::vector<int> depth(n, std::numeric_limits<int>::max());
    for (const auto& id : starts) frontier[index_of(id)] = 1.0;

    auto usable = [&](const lex_edge& e) {
      return policy.relations.count(e.rel) && e.r >= cutoff;
    };
    for (int d = 1; d <= policy.max_depth; ++d) {
      std::vector<double> next(n, unreached);
      for (std::size_t u = 0; u < n; ++u) {
        if (frontier[u] == unreached) continue;
        auto relax = [&](std::size_t v, double t) {
          next[v] = std::max(next[v], frontier[u] * t);
        };
        if (go_down)
          for (auto ei : children_[u])
            if (usable(edges_[ei])) relax(by_id_.at(edges_[ei].child), edges_[ei].t);
        if (go_up)
          for (auto ei : parents_[u])
            if (usable(edges_[ei])) relax(by_id_.at(edges_[ei].parent), edges_[ei].t);
      }
      for (std::size_t v = 0; v < n; ++v) {
        if (next[v] == unreached) continue;
        best[v] = std::max(best[v], next[v]);
        depth[v] = std::min(depth[v], d);
      }
      frontier = std::move(next);
    }

    std::map<std::string, expanded_term> terms;
    for (std::size_t v = 0; v < n; ++v) {
      if (best[v] == unreached || starts.count(synsets_[v].id)) continue;
      for (const auto& lemma : synsets_[v].lemmas) {
        if (lemma == seed_norm) continue;
        auto [it, fresh] = terms.try_emplace(lemma, expanded_term{lemma, depth[v], best[v]});
        if (!fresh) {
          it->second.depth = std::min(it->second.depth, depth[v]);
          it->second.path_probability = std::max(it->second.path_probability, best[v]);
        }
      }
    }
    std::vector<expanded_term> out;
    for (auto& [_, t] : terms) out.push_back(std::move(t));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      if (a.depth != b.depth) return a.depth < b.depth;
      if (a.path_probability != b.path_probability)
        return a.path_probability > b.path_probability;
      return a.term < b.term;
    });
    return out;
  }

 private:
  static double parse_number(const std::string& tok, std::size_t lineno) {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw parse_error("not a number: '" + tok + "'", lineno);
    }
  }

  std::size_t index_of(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) throw domain_error("unknown synset id: " + std::string(id));
    return it->second;
  }

  // Iterative DFS over all edges; reports the edge that closes a cycle.
  void check_acyclic() const {
    enum : std::uint8_t { white, grey, black };
    std::vector<std::uint8_t> color(synsets_.size(), white);
    for (std::size_t root = 0; root < synsets_.size(); ++root) {
      if (color[root] != white) continue;
      std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
      color[root] = grey;
      while (!stack.empty()) {
        auto& [u, next_edge] = stack.back();
        if (next_edge == children_[u].size()) {
          color[u] = black;
          stack.pop_back();
          continue;
        }
        const auto& e = edges_[children_[u][next_edge++]];
        const auto v = by_id_.at(e.child);
        if (color[v] == grey)
          throw domain_error("cycle through edge " + e.parent + " -> " + e.child +
                             " (" + to_string(e.rel) + ")");
        if (color[v] == white) {
          color[v] = grey;
          stack.emplace_back(v, 0);
        }
      }
    }
  }

  std::vector<synset> synsets_;
  std::vector<lex_edge> edges_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_lemma_;
  std::vector<std::vector<std::size_t>> children_;  // edge indices by parent
  std::vector<std::vector<std::size_t>> parents_;   // edge indices by child
};

}  // namespace cqe
