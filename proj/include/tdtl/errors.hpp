#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tdtl {

/// Caller violated an operation's precondition (bad shape, parameter out of range).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Computation produced values outside the numeric contract (NaN/Inf, singular system).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file; carries the offending 1-based line number.
class ParseError : public IoError {
public:
    ParseError(const std::string& msg, std::size_t line)
        : IoError(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Input was well-formed but semantically invalid (duplicate id, missing label).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training diverged; carries the global step index where the loss went non-finite.
class TrainingError : public NumericError {
public:
    TrainingError(const std::string& msg, std::size_t step)
        : NumericError(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

}  // namespace tdtl
