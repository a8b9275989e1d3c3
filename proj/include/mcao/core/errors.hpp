#pragma once

#include <stdexcept>
#include <string>

namespace mcao {

// Invalid or inconsistent configuration (bad geometry, mismatched dimensions).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller passed arguments outside the operation's contract.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Frames of one loop iteration do not belong together.
struct FrameCoherenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text or binary input that does not follow its declared format.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace mcao
