#pragma once

// Search-engine occurrence source: result counts for AND-queries and related
// query suggestions, with a JSONL fixture cache that doubles as a replay set.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "cqe/clock.hpp"
#include "cqe/error.hpp"
#include "cqe/occurrence.hpp"
#include "cqe/text.hpp"

namespace cqe {

enum class engine_mode { live, replay, live_with_cache };

inline engine_mode parse_engine_mode(std::string_view s) {
  if (s == "live") return engine_mode::live;
  if (s == "replay") return engine_mode::replay;
  if (s == "live-with-cache") return engine_mode::live_with_cache;
  throw config_error("unknown engine mode: " + std::string(s));
}

inline std::string to_string(engine_mode m) {
  switch (m) {
    case engine_mode::live: return "live";
    case engine_mode::replay: return "replay";
    case engine_mode::live_with_cache: return "live-with-cache";
  }
  return "?";
}

struct engine_config {
  // Endpoint answering web searches; the total count is read from the
  // response at `count_path` (a JSON pointer).
  std::string count_endpoint;
  // Endpoint answering query completions; `suggest_path` points at the
  // array, `suggest_field` names the string member of each element (empty
  // when elements are plain strings).
  std::string suggest_endpoint;
  std::string api_key;
  std::string auth_header = "Ocp-Apim-Subscription-Key";
  std::string query_param = "q";
  std::string count_path = "/webPages/totalEstimatedMatches";
  std::string suggest_path = "/suggestionGroups/0/searchSuggestions";
  std::string suggest_field = "query";
  engine_mode mode = engine_mode::replay;
  std::uint64_t M_estimate = 10'000'000'000ULL;
  double rate_limit = 0.0;  // requests per second, 0 = unlimited
  std::chrono::milliseconds timeout{10'000};
  std::filesystem::path fixtures_dir;  // holds hits.jsonl, suggestions.jsonl
};

struct hit_fixture {
  std::string key;
  std::uint64_t count = 0;
  std::string fetched_at;
};

// Canonical engine query for a conjunction: normalized terms, deduplicated,
// sorted, each double-quoted, joined with " AND ".
inline std::string canonical_key(std::span<const std::string> terms) {
  std::set<std::string> norm;
  for (const auto& t : terms) {
    auto n = normalize_term(t);
    if (!n.empty()) norm.insert(std::move(n));
  }
  if (norm.empty()) throw domain_error("empty term set");
  std::string key;
  for (const auto& t : norm) {
    if (!key.empty()) key += " AND ";
    key += '"' + t + '"';
  }
  return key;
}

// Terms of a key written as `"a" AND "b"` (quotes optional, any order).
inline std::vector<std::string> key_terms(std::string_view key) {
  std::vector<std::string> terms;
  std::size_t pos = 0;
  while (pos <= key.size()) {
    auto next = key.find(" AND ", pos);
    auto part = trim(key.substr(pos, next == std::string_view::npos
                                         ? std::string_view::npos
                                         : next - pos));
    if (part.size() >= 2 && part.front() == '"' && part.back() == '"')
      part = part.substr(1, part.size() - 2);
    terms.push_back(std::move(part));
    if (next == std::string_view::npos) break;
    pos = next + 5;
  }
  return terms;
}

inline std::string canonicalize_key(std::string_view key) {
  const auto terms = key_terms(key);
  return canonical_key(terms);
}

struct http_response {
  int status = 0;
  std::string body;
};

// Minimal GET interface so the engine client can run against a fake.
class http_transport {
 public:
  virtual ~http_transport() = default;
  // Throws transport_error when no response arrives.
  virtual http_response get(const std::string& url,
                            const std::multimap<std::string, std::string>& params,
                            const std::multimap<std::string, std::string>& headers,
                            std::chrono::milliseconds timeout) = 0;
};

class httplib_transport : public http_transport {
 public:
  http_response get(const std::string& url,
                    const std::multimap<std::string, std::string>& params,
                    const std::multimap<std::string, std::string>& headers,
                    std::chrono::milliseconds timeout) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
      throw config_error("endpoint is not an absolute URL: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_begin);
    const std::string path =
        path_begin == std::string::npos ? "/" : url.substr(path_begin);

    httplib::Client cli(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    httplib::Params p(params.begin(), params.end());
    httplib::Headers h(headers.begin(), headers.end());
    auto res = cli.Get(path, p, h);
    if (!res)
      throw transport_error("request to " + origin + " failed: " +
                            httplib::to_string(res.error()));
    return {res->status, res->body};
  }
};

// Spaces requests at least 1/rate seconds apart; acquire() blocks until a
// slot is free.
class rate_limiter {
 public:
  explicit rate_limiter(double per_second) {
    if (per_second > 0)
      interval_ = std::chrono::duration_cast<clock::duration>(
          std::chrono::duration<double>(1.0 / per_second));
  }

  void acquire() {
    if (interval_ == clock::duration::zero()) return;
    clock::time_point slot;
    {
      std::lock_guard lock(mu_);
      const auto now = clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  using clock = std::chrono::steady_clock;
  std::mutex mu_;
  clock::duration interval_{};
  clock::time_point next_{};
};

// Strips the seed's tokens from each suggestion, drops the ones left empty
// and duplicates, keeps engine order, truncates to `limit`.
inline std::vector<std::string> strip_seed(std::string_view seed,
                                           std::span<const std::string> raw,
                                           std::size_t limit) {
  const auto seed_tokens = tokenize(seed);
  const std::set<std::string> drop(seed_tokens.begin(), seed_tokens.end());
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : raw) {
    if (out.size() >= limit) break;
    std::vector<std::string> kept;
    for (auto& t : tokenize(s))
      if (!drop.count(t)) kept.push_back(std::move(t));
    if (kept.empty()) continue;
    auto cand = join(kept);
    if (seen.insert(cand).second) out.push_back(std::move(cand));
  }
  return out;
}

class engine_client : public occurrence_source {
 public:
  explicit engine_client(engine_config cfg,
                         std::shared_ptr<http_transport> transport = nullptr,
                         clock_fn now = utc_timestamp)
      : cfg_(std::move(cfg)),
        transport_(transport ? std::move(transport)
                             : std::make_shared<httplib_transport>()),
        now_(std::move(now)),
        limiter_(cfg_.rate_limit) {
    if (cfg_.M_estimate == 0) throw config_error("M_estimate must be positive");
    if (cfg_.mode != engine_mode::live) load_fixtures();
  }

  const engine_config& config() const noexcept { return cfg_; }

  // Requests issued to the transport so far.
  std::uint64_t request_count() const noexcept { return requests_.load(); }

  // Problems found while loading fixtures (inconsistent counts that were
  // clamped, malformed lines skipped).
  const std::vector<std::string>& load_warnings() const noexcept {
    return warnings_;
  }

  std::uint64_t total() const override { return cfg_.M_estimate; }

  std::uint64_t count(std::span<const std::string> terms) const override {
    return fetch_count(terms);
  }

  std::uint64_t fetch_count(std::span<const std::string> terms) const {
    const auto key = canonical_key(terms);
    if (cfg_.mode != engine_mode::live) {
      std::shared_lock lock(mu_);
      if (auto it = hits_.find(key); it != hits_.end())
        return checked(key, it->second.count);
    }
    if (cfg_.mode == engine_mode::replay) throw fixture_miss(key);

    const auto body = request(cfg_.count_endpoint, key);
    const std::uint64_t n = parse_count(body, key);
    store_hit({key, n, now_()});
    return checked(key, n);
  }

  std::vector<std::string> fetch_suggestions(std::string_view seed,
                                             std::size_t limit) const {
    const auto norm = normalize_term(seed);
    if (norm.empty()) throw domain_error("empty seed");
    if (limit == 0) return {};
    if (cfg_.mode != engine_mode::live) {
      std::shared_lock lock(mu_);
      if (auto it = suggestions_.find(norm); it != suggestions_.end())
        return strip_seed(norm, it->second, limit);
    }
    if (cfg_.mode == engine_mode::replay)
      throw fixture_miss("suggestions:" + norm);

    const auto body = request(cfg_.suggest_endpoint, norm);
    auto raw = parse_suggestions(body, norm);
    store_suggestions(norm, raw);
    return strip_seed(norm, raw, limit);
  }

 private:
  std::uint64_t checked(const std::string& key, std::uint64_t n) const {
    if (n > cfg_.M_estimate)
      throw config_error("count " + std::to_string(n) + " for " + key +
                         " exceeds M_estimate " +
                         std::to_string(cfg_.M_estimate));
    return n;
  }

  std::string request(const std::string& endpoint, const std::string& q) const {
    if (endpoint.empty()) throw config_error("engine endpoint not configured");
    std::multimap<std::string, std::string> params{{cfg_.query_param, q}};
    std::multimap<std::string, std::string> headers;
    if (!cfg_.api_key.empty()) headers.emplace(cfg_.auth_header, cfg_.api_key);
    limiter_.acquire();
    ++requests_;
    const auto res = transport_->get(endpoint, params, headers, cfg_.timeout);
    if (res.status < 200 || res.status >= 300)
      throw transport_error("engine returned HTTP " + std::to_string(res.status) +
                            " for " + q);
    return res.body;
  }

  std::uint64_t parse_count(const std::string& body, const std::string& key) const {
    try {
      const auto j = nlohmann::json::parse(body);
      const auto& v = j.at(nlohmann::json::json_pointer(cfg_.count_path));
      if (v.is_number_unsigned()) return v.get<std::uint64_t>();
      if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v.get<std::int64_t>());
      if (v.is_string()) return std::stoull(v.get<std::string>());
    } catch (const std::exception& e) {
      throw transport_error("unreadable count for " + key + ": " + e.what());
    }
    throw transport_error("count for " + key + " is not a non-negative integer");
  }

  std::vector<std::string> parse_suggestions(const std::string& body,
                                             const std::string& seed) const {
    std::vector<std::string> out;
    try {
      const auto j = nlohmann::json::parse(body);
      const auto& arr = j.at(nlohmann::json::json_pointer(cfg_.suggest_path));
      for (const auto& item : arr) {
        if (item.is_string())
          out.push_back(item.get<std::string>());
        else if (!cfg_.suggest_field.empty() && item.contains(cfg_.suggest_field))
          out.push_back(item.at(cfg_.suggest_field).get<std::string>());
      }
    } catch (const std::exception& e) {
      throw transport_error("unreadable suggestions for " + seed + ": " + e.what());
    }
    return out;
  }

  std::filesystem::path hits_path() const { return cfg_.fixtures_dir / "hits.jsonl"; }
  std::filesystem::path suggestions_path() const {
    return cfg_.fixtures_dir / "suggestions.jsonl";
  }

  void append_line(const std::filesystem::path& path, const nlohmann::json& j) const {
    if (cfg_.fixtures_dir.empty()) return;
    std::lock_guard lock(write_mu_);
    std::filesystem::create_directories(cfg_.fixtures_dir);
    std::ofstream os(path, std::ios::app);
    if (!os) throw error("cannot append to " + path.string());
    os << j.dump() << '\n';
    os.flush();
  }

  void store_hit(hit_fixture f) const {
    append_line(hits_path(), {{"key", f.key}, {"count", f.count}, {"fetched_at", f.fetched_at}});
    std::unique_lock lock(mu_);
    hits_[f.key] = std::move(f);
  }

  void store_suggestions(const std::string& seed,
                         const std::vector<std::string>& raw) const {
    append_line(suggestions_path(),
                {{"seed", seed}, {"suggestions", raw}, {"fetched_at", now_()}});
    std::unique_lock lock(mu_);
    suggestions_[seed] = raw;
  }

  void load_fixtures() {
    if (cfg_.fixtures_dir.empty()) return;
    if (std::ifstream is{hits_path()}) {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
          const auto j = nlohmann::json::parse(line);
          hit_fixture f{canonicalize_key(j.at("key").get<std::string>()),
                        j.at("count").get<std::uint64_t>(),
                        j.value("fetched_at", "")};
          hits_[f.key] = std::move(f);  // last entry wins
        } catch (const std::exception& e) {
          throw parse_error("hits.jsonl: " + std::string(e.what()), lineno);
        }
      }
    }
    if (std::ifstream is{suggestions_path()}) {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
          const auto j = nlohmann::json::parse(line);
          suggestions_[normalize_term(j.at("seed").get<std::string>())] =
              j.at("suggestions").get<std::vector<std::string>>();
        } catch (const std::exception& e) {
          throw parse_error("suggestions.jsonl: " + std::string(e.what()), lineno);
        }
      }
    }
    repair_conjunctions();
  }

  // A conjunction can never match more documents than any of its terms.
  // Engines report estimates that break this; clamp at load time.
  void repair_conjunctions() {
    for (auto& [key, f] : hits_) {
      const auto terms = key_terms(key);
      if (terms.size() < 2) continue;
      for (const auto& t : terms) {
        const std::string single[] = {t};
        auto it = hits_.find(canonical_key(single));
        if (it == hits_.end() || f.count <= it->second.count) continue;
        warnings_.push_back("clamped " + key + " from " + std::to_string(f.count) +
                            " to " + std::to_string(it->second.count));
        f.count = it->second.count;
      }
    }
  }

  engine_config cfg_;
  std::shared_ptr<http_transport> transport_;
  clock_fn now_;
  mutable rate_limiter limiter_;
  mutable std::atomic<std::uint64_t> requests_{0};
  mutable std::shared_mutex mu_;
  mutable std::mutex write_mu_;
  mutable std::map<std::string, hit_fixture> hits_;
  mutable std::map<std::string, std::vector<std::string>> suggestions_;
  std::vector<std::string> warnings_;
};

}  // namespace cqe
