#pragma once

#include <stdexcept>
#include <string>

namespace memchan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A parameter record violates one of its documented invariants.
class InvalidParameter : public Error {
  public:
    using Error::Error;
};

/// A covariance is not positive semidefinite, or its symplectic spectrum
/// drops below the vacuum value 1/2.
class NonPhysicalCovariance : public Error {
  public:
    using Error::Error;
};

/// The memory degree is too large for the noise level: some diagonal entry
/// of the diagonal noise part is negative.
class InfeasibleMemory : public Error {
  public:
    using Error::Error;
};

/// The input correlation is too large for the photon budget left after
/// squeezing: some diagonal entry of the diagonal modulation part is
/// negative.
class InfeasibleCorrelation : public Error {
  public:
    using Error::Error;
};

/// Squeezing consumes more photons than the budget allows.
class InfeasibleSqueezing : public Error {
  public:
    using Error::Error;
};

/// The feasible parameter region has no point in it.
class EmptyRegion : public Error {
  public:
    using Error::Error;
};

} // namespace memchan
