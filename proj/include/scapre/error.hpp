#pragma once

#include <stdexcept>
#include <string>

namespace scapre {

/// Failure categories. The CLI maps them onto its exit codes.
enum class ErrorKind {
    config,     // malformed input, bad shapes or parameters
    numerical,  // a numerical stage could not produce a valid result
    io,         // missing, unreadable or truncated files
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what, std::string stage = {})
        : std::runtime_error(stage.empty() ? what : stage + ": " + what),
          kind_(kind),
          stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorKind kind_;
    std::string stage_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what, std::string stage = {})
        : Error(ErrorKind::config, what, std::move(stage)) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what, std::string stage = {})
        : Error(ErrorKind::numerical, what, std::move(stage)) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what, std::string stage = {})
        : Error(ErrorKind::io, what, std::move(stage)) {}
};

}  // namespace scapre
