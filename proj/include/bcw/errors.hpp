#pragma once

#include <stdexcept>
#include <string>

namespace bcw {

/// A numerical precondition was violated (CFL, non-finite input, grid mismatch, ...).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A pipeline stage produced a result that violates one of its own invariants.
class PipelineFault : public std::runtime_error {
public:
    explicit PipelineFault(const std::string& what) : std::runtime_error(what) {}
};

} // namespace bcw
