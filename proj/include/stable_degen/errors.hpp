#pragma once

#include <stdexcept>
#include <string>

namespace stable_degen {

// Three failure classes; the CLI maps each to its own exit status.

/// Inputs that violate a precondition (bad config, out-of-domain argument).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Rank, conditioning or quadrature failures.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A computed result broke an invariant it is supposed to satisfy.
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace stable_degen
