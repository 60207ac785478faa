#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mrsim {

// Value outside the domain of an operation (bad level, bad fraction, shape mismatch).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid run, classifier, scheduler or workload configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input document. `line` is 1-based, 0 when not line oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Broken engine invariant; never expected in a correct build.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mrsim
