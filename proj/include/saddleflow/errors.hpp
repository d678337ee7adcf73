#pragma once

#include <stdexcept>
#include <string>

namespace saddleflow {

// Base of every error thrown by the library. The CLI maps the concrete
// subclasses onto its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A parameter violates its admissible range. `field` names the offending key
// so callers can report it against the input file.
class ParameterError : public Error {
public:
    ParameterError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)), message_(what) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string field_;
    std::string message_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Series data unusable for the requested analysis (e.g. nonpositive values
// inside a log-log fit window).
class DataError : public Error {
public:
    using Error::Error;
};

// Tikhonov path did not converge or a regularized solve hit its iteration cap.
class PathError : public Error {
public:
    using Error::Error;
};

} // namespace saddleflow
