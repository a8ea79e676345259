#pragma once

#include <stdexcept>
#include <string>

namespace hotemboss {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, long line = -1)
        : Error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// material
class SingularTemperatureError : public Error {
public:
    using Error::Error;
};
class TableRangeError : public Error {
public:
    using Error::Error;
};

// mesh
class DegenerateElementError : public Error {
public:
    using Error::Error;
};
class NonManifoldError : public Error {
public:
    using Error::Error;
};

// linear algebra
class DimensionMismatchError : public Error {
public:
    using Error::Error;
};
class SolverBreakdownError : public Error {
public:
    using Error::Error;
};
class SolverMaxIterError : public Error {
public:
    using Error::Error;
};
class ZeroPivotError : public Error {
public:
    ZeroPivotError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// mechanics
class SingularConstraintError : public Error {
public:
    using Error::Error;
};
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace hotemboss
