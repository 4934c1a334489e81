#pragma once

#include <stdexcept>
#include <string>

namespace fracwave {

/// Values contain NaN/Inf, or a field/grid failed validation.
class InvalidFieldError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class GridMismatchError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidParamsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Newton Jacobian restricted to the even sector is numerically singular.
class BifurcationPointError : public std::runtime_error {
public:
    BifurcationPointError(const std::string& what, double smallest_singular_value)
        : std::runtime_error(what), smallest_singular_value_(smallest_singular_value) {}
    double smallest_singular_value() const { return smallest_singular_value_; }

private:
    double smallest_singular_value_;
};

class NormalFormError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ConstraintViolationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SectorError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OperatorStateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Schema version of a persisted file does not match this build.
class SchemaVersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : std::runtime_error(what), byte_offset_(byte_offset) {}
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracwave
