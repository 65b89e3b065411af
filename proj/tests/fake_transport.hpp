#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "cqe/engine_client.hpp"

// Scripted engine: answers count and suggestion requests from in-memory
// tables and remembers every request it saw.
class fake_engine : public cqe::http_transport {
 public:
  std::map<std::string, std::uint64_t> counts;  // canonical key -> count
  std::map<std::string, std::vector<std::string>> suggestions;
  bool fail = false;
  int status = 200;

  cqe::http_response get(const std::string& url,
                         const std::multimap<std::string, std::string>& params,
                         const std::multimap<std::string, std::string>& headers,
                         std::chrono::milliseconds) override {
    std::lock_guard lock(mu);
    ++calls;
    const auto q = params.find("q")->second;
    seen_queries.push_back(q);
    if (auto h = headers.find("Ocp-Apim-Subscription-Key"); h != headers.end())
      seen_keys.push_back(h->second);
    if (fail) throw cqe::transport_error("connection refused");
    if (status != 200) return {status, "{}"};
    if (url.find("suggest") != std::string::npos) {
      nlohmann::json items = nlohmann::json::array();
      for (const auto& s : suggestions[q]) items.push_back({{"query", s}, {"displayText", s}});
      return {200, nlohmann::json{{"suggestionGroups", {{{"searchSuggestions", items}}}}}.dump()};
    }
    return {200, nlohmann::json{{"webPages", {{"totalEstimatedMatches", counts[q]}}}}.dump()};
  }

  std::atomic<int> calls{0};
  std::vector<std::string> seen_queries;
  std::vector<std::string> seen_keys;
  std::mutex mu;
};
