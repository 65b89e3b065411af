#pragma once

#include <stdexcept>
#include <string>

namespace cqe {

// Base for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs outside an operation's domain (unknown term, empty context, ...).
class domain_error : public error {
 public:
  using error::error;
};

// Malformed input file; line is 1-based, 0 when unknown.
class parse_error : public error {
 public:
  parse_error(const std::string& what, std::size_t line = 0)
      : error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ingestion_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

// Network failure talking to a search engine. Retryable.
class transport_error : public error {
 public:
  using error::error;
};

// Replay mode asked for a key that no fixture records.
class fixture_miss : public error {
 public:
  explicit fixture_miss(const std::string& key)
      : error("no fixture for key: " + key), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Every candidate source came back empty or failed.
class pool_empty_error : public error {
 public:
  using error::error;
};

class ranking_empty_error : public error {
 public:
  using error::error;
};

}  // namespace cqe
