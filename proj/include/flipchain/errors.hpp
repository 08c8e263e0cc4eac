#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flipchain {

/// Caller violated a precondition (stale handle, invalid input state).
class usage_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Malformed serialized input. Carries the 1-based line number of the fault.
class parse_error : public std::runtime_error {
 public:
  parse_error(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace flipchain
