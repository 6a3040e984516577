#pragma once

#include <stdexcept>
#include <string>

namespace mamm {

enum class ErrorKind { input, solver };

/// Base class for every error raised by the library. The kind decides the
/// CLI exit code and the HTTP status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

/// Parse error in a BVH document; line() is 1-based.
class BvhError : public InputError {
public:
    BvhError(int line, const std::string& what)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace mamm
