#pragma once

#include <stdexcept>
#include <string>

namespace matchflow {

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable byte stream: broken CSV framing, truncated quoted field, ...
// Carries the 1-based line number where the problem starts.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Input file is structurally unusable: mandatory column missing, empty file.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Violated precondition or invalid configuration value.
class DomainError : public Error {
public:
    using Error::Error;
};

// Request exceeds a hard capacity limit (e.g. 2^p subset enumeration).
class CapacityError : public Error {
public:
    using Error::Error;
};

// A user-supplied callable produced an unusable value (NaN, inf).
class EvalError : public Error {
public:
    using Error::Error;
};

}  // namespace matchflow
