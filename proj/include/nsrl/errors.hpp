#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace nsrl {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The policy-induced chain has no unique stationary distribution.
struct NonErgodic : Error {
    using Error::Error;
};

struct SingularSystem : Error {
    using Error::Error;
};

// Relative value iteration stalled; carries the time index when raised
// from a benchmark series (npos otherwise).
struct NoConvergence : Error {
    explicit NoConvergence(const std::string& what, std::size_t t = npos) : Error(what), time(t) {}
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t time;
};

struct IndexOutOfHorizon : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct InvalidHorizon : Error {
    using Error::Error;
};

struct InvalidProbability : Error {
    using Error::Error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// Configuration rejected; `field` names the offending key.
struct ConfigError : Error {
    ConfigError(std::string field_name, const std::string& message)
        : Error(field_name + ": " + message), field(std::move(field_name)) {}
    std::string field;
};

}  // namespace nsrl
