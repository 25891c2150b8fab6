#pragma once

#include <stdexcept>
#include <string>

namespace kgr {

// Error taxonomy mirrored by the CLI exit codes:
//   ConfigError -> 2 (usage), ParseError/DataError/SaturationError -> 3 (data),
//   NumericError -> 4 (numeric failure).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error("parse error at line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Negative sampling could not find a non-member triple/pair within the attempt budget.
class SaturationError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace kgr
