#pragma once

#include <stdexcept>
#include <string>

namespace charmend {

/// Shape disagreement between tensor operands.
class DimensionError : public std::runtime_error {
public:
    explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument value (out-of-range id, empty input, bad rate, ...).
class ArgumentError : public std::runtime_error {
public:
    explicit ArgumentError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed textual input; carries a 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}
    size_t line() const { return line_; }

private:
    size_t line_;
};

/// Structurally invalid binary or sectioned file (checkpoint, ARPA, ...).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite value where a finite one is required (loss blow-up etc.).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace charmend
