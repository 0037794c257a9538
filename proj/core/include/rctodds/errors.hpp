#pragma once

#include <stdexcept>
#include <string>

namespace rctodds {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A population-level success probability landed on 0 or 1, so its log odds
// is undefined.
struct DegenerateParameter : Error {
    using Error::Error;
};

// round(n * pi_t) would put zero subjects in one of the two arms.
struct InvalidFraction : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

// Design matrix (1, x, z) has rank < 3.
struct RankDeficient : Error {
    using Error::Error;
};

// The MLE diverges: some hyperplane in (x, z) perfectly predicts y.
struct Separation : Error {
    using Error::Error;
};

struct MaxIterations : Error {
    using Error::Error;
};

struct TooManyFailures : Error {
    using Error::Error;
};

// Exhaustive enumeration was asked for more than ~1e6 assignments.
struct TooLarge : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

}  // namespace rctodds
