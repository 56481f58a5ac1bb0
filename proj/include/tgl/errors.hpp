#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace tgl {

/// Malformed or inconsistent caller input (dimensions, ranges, partitions).
class InputError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// CSV / config content that cannot be parsed. Coordinates are 1-based,
/// line 1 being the header row.
class ParseError : public InputError
{
public:
    ParseError(const std::string& what, long line, long column)
        : InputError(what + " (line " + std::to_string(line) + ", column "
                     + std::to_string(column) + ")"),
          message_(what), line_(line), column_(column)
    {}

    /// Message without the appended coordinates.
    const std::string& message() const noexcept { return message_; }
    long line() const noexcept { return line_; }
    long column() const noexcept { return column_; }

private:
    std::string message_;
    long line_;
    long column_;
};

/// Cholesky breakdown: the matrix is not (numerically) positive definite.
class FactorizationError : public std::runtime_error
{
public:
    explicit FactorizationError(Eigen::Index pivot)
        : std::runtime_error("Cholesky factorization failed: nonpositive pivot at index "
                             + std::to_string(pivot)),
          pivot_(pivot)
    {}

    Eigen::Index pivot() const noexcept { return pivot_; }

private:
    Eigen::Index pivot_;
};

class SolverError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace tgl
