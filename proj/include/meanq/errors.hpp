#pragma once

#include <stdexcept>
#include <string>

namespace meanq {

// Raised when a computation produced or received non-finite numbers.
// Run drivers catch this per seed and record the failure without
// aborting sibling runs.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Config parse/validation failure, anchored to a 1-based source line
// (line 0 when the error is not tied to a specific line).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}

    int line() const { return line_; }

private:
    int line_;
};

} // namespace meanq
