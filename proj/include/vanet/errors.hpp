#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vanet {

/// Bad argument to a pure function (degenerate segment, invalid parameter set).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Scenario or run configuration that violates a declared invariant.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input whose content breaks an invariant (e.g. non-monotone trace timestamps).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfSpan : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Internal consistency failure inside a simulation run. Runs fail fast on these.
class IntegrityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace vanet
