#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace revpath {

// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed network text. Line and column are 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Structurally invalid input: bad index, wrong dimension, violated precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A numerical routine could not produce a trustworthy answer (overflow,
// non-convergence, normalization fault, state leaving the admissible set).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace revpath
