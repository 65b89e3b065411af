#pragma once

// Ranking expansion candidates by PMING distance to the seed, and scoring
// rankings against the averaged user expectation rank (UER).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cqe/error.hpp"
#include "cqe/measures.hpp"
#include "cqe/occurrence.hpp"
#include "cqe/query_pool.hpp"

namespace cqe {

struct ranked_candidate {
  std::string term;
  double distance = 1.0;
  candidate_source source = candidate_source::lexical_graph;
  double pmi = pmi_never_cooccur;
  double ngd = ngd_unrelated;
  hit_counts counts;
};

// Ascending distance, ties by term.
inline void sort_ranked(std::vector<ranked_candidate>& v) {
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.term < b.term;
  });
}

struct ranking {
  std::vector<ranked_candidate> candidates;
  context_norms_t norms;
  std::vector<std::string> warnings;
};

// Scores every candidate against the seed with PMING, normalized over the
// context {seed} x candidates. Candidates whose counts cannot be fetched are
// dropped with a warning; a candidate (or seed) that never occurs gets
// distance 1.0.
inline ranking rank_candidates(const query_key& seed,
                               const std::vector<pool_candidate>& candidates,
                               const occurrence_source& counts,
                               double rho = default_rho,
                               double epsilon = default_epsilon) {
  if (candidates.empty()) throw ranking_empty_error("no candidates to rank");
  ranking out;
  std::optional<std::uint64_t> f_seed;
  std::string seed_failure;
  try {
    const std::string s[] = {seed.canonical};
    f_seed = counts.count(s);
  } catch (const std::exception& e) {
    seed_failure = e.what();
  }

  std::vector<hit_counts> context;
  for (const auto& c : candidates) {
    if (!f_seed) {
      out.warnings.push_back("dropped '" + c.term + "': seed count unavailable: " +
                             seed_failure);
      continue;
    }
    try {
      const std::string one[] = {c.term};
      const std::string both[] = {seed.canonical, c.term};
      hit_counts h{*f_seed, counts.count(one), counts.count(both), counts.total()};
      ranked_candidate r{c.term, 1.0, c.source, pmi_never_cooccur, ngd_unrelated, h};
      validate(h);
      if (h.f_x > 0 && h.f_y > 0) {
        r.pmi = pmi(h);
        r.ngd = ngd(h);
        if (h.f_xy > 0) context.push_back(h);
      }
      out.candidates.push_back(std::move(r));
    } catch (const std::exception& e) {
      out.warnings.push_back("dropped '" + c.term + "': " + e.what());
    }
  }
  if (out.candidates.empty()) {
    std::string msg = "every candidate was dropped";
    if (!out.warnings.empty()) msg += "; " + out.warnings.front();
    throw ranking_empty_error(msg);
  }

  out.norms = context.empty() ? context_norms_t{epsilon, epsilon, rho, epsilon, std::nullopt}
                              : context_norms(context, rho, epsilon);
  validate(out.norms);
  for (auto& r : out.candidates)
    if (r.counts.f_xy > 0) r.distance = pming(r.counts, out.norms);
  sort_ranked(out.candidates);
  return out;
}

struct voter_ranking {
  std::string voter_id;
  std::vector<std::string> order;
};

struct ue_ranking {
  std::vector<std::string> order;
  std::map<std::string, double> mean_ranks;
};

namespace detail {

inline std::string describe_difference(const std::set<std::string>& a,
                                       const std::set<std::string>& b) {
  std::vector<std::string> only_a, only_b;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
  std::string s = "term sets differ: only in first [" + join(only_a, ", ") +
                  "], only in second [" + join(only_b, ", ") + "]";
  return s;
}

inline std::set<std::string> as_permutation(const std::vector<std::string>& order,
                                             const std::string& who) {
  std::set<std::string> s(order.begin(), order.end());
  if (s.size() != order.size()) throw domain_error(who + " repeats a term");
  return s;
}

inline void require_same_terms(const std::vector<std::string>& a,
                               const std::vector<std::string>& b) {
  const auto sa = as_permutation(a, "first ranking");
  const auto sb = as_permutation(b, "second ranking");
  if (sa != sb) throw domain_error(describe_difference(sa, sb));
}

}  // namespace detail

// Mean 1-based position of each term across voters; order by ascending mean,
// ties by term.
inline ue_ranking aggregate_uer(const std::vector<voter_ranking>& votes) {
  if (votes.empty()) throw domain_error("no voter rankings");
  const auto reference = detail::as_permutation(votes.front().order, votes.front().voter_id);
  std::map<std::string, double> sum;
  for (const auto& v : votes) {
    const auto terms = detail::as_permutation(v.order, "voter " + v.voter_id);
    if (terms != reference)
      throw domain_error("voter " + v.voter_id + ": " +
                         detail::describe_difference(reference, terms));
    for (std::size_t i = 0; i < v.order.size(); ++i)
      sum[v.order[i]] += static_cast<double>(i + 1);
  }
  ue_ranking u;
  for (auto& [term, s] : sum) {
    u.mean_ranks[term] = s / static_cast<double>(votes.size());
    u.order.push_back(term);
  }
  std::stable_sort(u.order.begin(), u.order.end(), [&](const auto& a, const auto& b) {
    return u.mean_ranks[a] < u.mean_ranks[b];
  });
  return u;
}

// Kendall tau-a: 1 - 2 * discordant / C(n, 2).
inline double kendall_tau(const std::vector<std::string>& r1,
                          const std::vector<std::string>& r2) {
  detail::require_same_terms(r1, r2);
  const std::size_t n = r1.size();
  if (n < 2) throw domain_error("kendall tau needs at least two terms");
  std::map<std::string, std::size_t> pos2;
  for (std::size_t i = 0; i < n; ++i) pos2[r2[i]] = i;
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = pos2[r1[i]];
  std::uint64_t discordant = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (p[i] > p[j]) ++discordant;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return 1.0 - 2.0 * static_cast<double>(discordant) / pairs;
}

// Spearman rho between the UER (mean ranks, tied means share their midrank)
// and a strict system ranking. NaN when the UER has every term tied.
inline double spearman_rho(const ue_ranking& uer, const std::vector<std::string>& system) {
  detail::require_same_terms(uer.order, system);
  const std::size_t n = system.size();
  if (n < 2) throw domain_error("spearman rho needs at least two terms");

  std::map<std::string, double> uer_rank;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    const double m = uer.mean_ranks.at(uer.order[i]);
    while (j < n && uer.mean_ranks.at(uer.order[j]) == m) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) uer_rank[uer.order[k]] = mid;
    i = j;
  }
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = uer_rank.at(system[i]);
    b[i] = static_cast<double>(i + 1);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

struct named_ranking {
  std::string name;
  std::vector<std::string> order;
};

struct system_score {
  std::string name;
  std::vector<std::string> order;
  double kendall_tau = 0.0;
  double spearman_rho = 0.0;
};

struct comparison_report {
  ue_ranking uer;
  std::vector<system_score> systems;
};

inline comparison_report compare_report(const ue_ranking& uer,
                                        const std::vector<named_ranking>& systems) {
  comparison_report rep{uer, {}};
  for (const auto& s : systems) {
    try {
      rep.systems.push_back({s.name, s.order, kendall_tau(uer.order, s.order),
                             spearman_rho(uer, s.order)});
    } catch (const domain_error& e) {
      throw domain_error("system " + s.name + ": " + e.what());
    }
  }
  return rep;
}

namespace detail {
inline std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}
}  // namespace detail

// Side-by-side ordering table followed by one score line per system.
inline std::string render_text(const comparison_report& rep) {
  std::vector<std::vector<std::string>> cols;
  std::vector<std::string> head{"rank", "UER"};
  cols.push_back({});
  cols.push_back(rep.uer.order);
  for (std::size_t i = 0; i < rep.uer.order.size(); ++i)
    cols[0].push_back(std::to_string(i + 1));
  for (const auto& s : rep.systems) {
    head.push_back(s.name);
    cols.push_back(s.order);
  }
  std::vector<std::size_t> width(head.size());
  for (std::size_t c = 0; c < head.size(); ++c) {
    width[c] = head[c].size();
    for (const auto& cell : cols[c]) width[c] = std::max(width[c], cell.size());
  }
  std::ostringstream os;
  auto row = [&](auto cell_at) {
    for (std::size_t c = 0; c < head.size(); ++c) {
      const std::string cell = cell_at(c);
      os << (c ? "  " : "") << cell;
      if (c + 1 < head.size()) os << std::string(width[c] - cell.size(), ' ');
    }
    os << '\n';
  };
  row([&](std::size_t c) { return head[c]; });
  for (std::size_t r = 0; r < rep.uer.order.size(); ++r)
    row([&](std::size_t c) { return cols[c][r]; });
  if (!rep.systems.empty()) {
    os << '\n';
    std::size_t nw = 6;
    for (const auto& s : rep.systems) nw = std::max(nw, s.name.size());
    os << "system" << std::string(nw - 6, ' ') << "  kendall_tau  spearman_rho\n";
    for (const auto& s : rep.systems)
      os << s.name << std::string(nw - s.name.size(), ' ') << "  " << std::setw(11)
         << detail::fixed(s.kendall_tau) << "  " << std::setw(12)
         << detail::fixed(s.spearman_rho) << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

// JSONL records: one for the UER, one per system.
inline std::string render_json(const comparison_report& rep) {
  std::ostringstream os;
  nlohmann::ordered_json means = nlohmann::ordered_json::object();
  for (const auto& t : rep.uer.order) means[t] = rep.uer.mean_ranks.at(t);
  os << nlohmann::ordered_json{{"system", "uer"}, {"order", rep.uer.order}, {"mean_ranks", means}}
            .dump()
     << '\n';
  for (const auto& s : rep.systems)
    os << nlohmann::ordered_json{{"system", s.name},
                                 {"order", s.order},
                                 {"kendall_tau", json_number(s.kendall_tau)},
                                 {"spearman_rho", json_number(s.spearman_rho)}}
              .dump()
       << '\n';
  return os.str();
}

inline std::vector<voter_ranking> read_voter_rankings(std::istream& is) {
  std::vector<voter_ranking> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("voter_id").get<std::string>(),
                     j.at("order").get<std::vector<std::string>>()});
    } catch (const std::exception& e) {
      throw parse_error(std::string("voter rankings: ") + e.what(), lineno);
    }
  }
  return out;
}

// JSONL, one {name, order} object per line.
inline std::vector<named_ranking> read_named_rankings(std::istream& is) {
  std::vector<named_ranking> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("name").get<std::string>(),
                     j.at("order").get<std::vector<std::string>>()});
    } catch (const std::exception& e) {
      throw parse_error(std::string("system rankings: ") + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace cqe
