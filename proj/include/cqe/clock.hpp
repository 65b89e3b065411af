#pragma once

#include <chrono>
#include <ctime>
#include <functional>
#include <string>

namespace cqe {

// Source of ISO-8601 UTC timestamps; swapped out in tests for determinism.
using clock_fn = std::function<std::string()>;

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace cqe
