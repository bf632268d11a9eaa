#pragma once

#include <stdexcept>
#include <string>

namespace opatomo {

/// Base for all domain errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on parameters or inputs was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Too much mass near the fold point for a single-displacement estimate.
class PositivityViolation : public Error {
public:
    PositivityViolation(double fraction, double threshold);
    double fraction() const noexcept { return fraction_; }

private:
    double fraction_;
};

class DegenerateSupport : public Error {
public:
    using Error::Error;
};

class InconsistentBinning : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class NotConcave : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class NonPositiveApex : public Error {
public:
    using Error::Error;
};

inline PositivityViolation::PositivityViolation(double fraction, double threshold)
    : Error("positivity check failed: " + std::to_string(fraction) + " of fold values below cut (threshold "
            + std::to_string(threshold) + "); use a second displaced batch"),
      fraction_(fraction)
{
}

} // namespace opatomo
