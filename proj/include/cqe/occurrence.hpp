#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace cqe {

// Anything that can report how many documents contain a conjunction of
// terms. A term may hold several words ("expo 2013"); it is matched as the
// AND of its tokens by corpus sources and as a quoted phrase by engines.
class occurrence_source {
 public:
  virtual ~occurrence_source() = default;

  virtual std::uint64_t count(std::span<const std::string> terms) const = 0;

  // Total documents, M.
  virtual std::uint64_t total() const = 0;
};

}  // namespace cqe
