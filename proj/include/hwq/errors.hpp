#pragma once

#include <stdexcept>
#include <string>

namespace hwq {

// Bad user input: rejected parameters, malformed configs, violated
// preconditions. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-convergent quadrature, bracket failure,
// factorization breakdown. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Resource limits, e.g. the event-count cap of a simulation run.
class ResourceError : public std::runtime_error {
public:
    explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hwq
