#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace phonolib {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Documented precondition violated (model validity window, grid shape).
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad command-line usage or empty inputs.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitError : NumericalError {
    using NumericalError::NumericalError;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line, const std::string& source = {})
        : std::runtime_error(render(what, line, source)), detail_(what), source_(source), line_(line) {}
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }
    const std::string& source() const noexcept { return source_; }

private:
    static std::string render(const std::string& what, std::size_t line, const std::string& source) {
        std::string where = source;
        if (line) where += (where.empty() ? "line " : ":") + std::to_string(line);
        return where.empty() ? what : where + ": " + what;
    }
    std::string detail_;
    std::string source_;
    std::size_t line_;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace phonolib
