#pragma once

#include <stdexcept>
#include <string>

namespace noelab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct WrongModel : Error {
    using Error::Error;
};

struct NotSpacelike : Error {
    using Error::Error;
};

struct NotFutureLike : Error {
    using Error::Error;
};

struct AlgebraViolation : Error {
    using Error::Error;
};

struct NotAGroupElement : Error {
    using Error::Error;
};

struct ChordNotFutureLike : Error {
    using Error::Error;
};

struct SamplingDegenerate : Error {
    using Error::Error;
};

struct NoConvergence : Error {
    int iterations;
    double residual;
    NoConvergence(int iters, double res)
        : Error("solver failed to converge after " + std::to_string(iters) +
                " iterations, gradient norm " + std::to_string(res)),
          iterations(iters),
          residual(res) {}
};

struct ParseError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace noelab
