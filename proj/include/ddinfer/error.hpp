#pragma once

#include <stdexcept>
#include <string>

namespace ddinfer {

// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
    invalid_argument,  // precondition, shape or configuration problem
    numerical,         // conditioning, degenerate data, rank problems
    io,                // file access and parse failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ErrorKind::invalid_argument, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

// Regularized normal matrix could not be factorized reliably.
class ConditioningError : public NumericalError {
public:
    ConditioningError(const std::string& what, double condition_estimate)
        : NumericalError(what), condition_estimate_(condition_estimate) {}
    double condition_estimate() const noexcept { return condition_estimate_; }

private:
    double condition_estimate_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

class ParseError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace ddinfer
