#pragma once

#include <stdexcept>
#include <string>

namespace sunlit {

// Error taxonomy shared by every module. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside a model's validity window (timestamps, coordinates).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition (shapes, counts, freeze contract).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Non-finite values, divergence, or non-PSD matrices.
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// An upstream pipeline stage has not produced its artifacts yet.
class PipelineError : public Error {
public:
    PipelineError(const std::string& what, std::string stage) : Error(what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace sunlit
