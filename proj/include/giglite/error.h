#pragma once

#include <stdexcept>
#include <string>

namespace giglite {

/// Topology violations: dangling endpoints, duplicate edges.
class StructuralError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Schema and column layout violations.
class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class LookupError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed text or binary input; `line` is 1-based, 0 when not applicable.
class ParseError : public std::runtime_error {
  public:
    ParseError(const std::string& what, size_t line = 0)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    size_t line() const { return line_; }

  private:
    size_t line_;
};

class TrainingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace giglite
