#ifndef MDR_ERRORS_HPP
#define MDR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mdr {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define MDR_DEFINE_ERROR(NAME)                                              \
    class NAME : public Error {                                             \
    public:                                                                  \
        explicit NAME(const std::string& what) : Error(what) {}              \
        const char* kind() const noexcept override { return #NAME; }         \
    }

/// Input matrix is malformed: non-square, non-finite entries, or asymmetry
/// beyond the symmetrization tolerance.
MDR_DEFINE_ERROR(InvalidMatrix);

/// Operands have incompatible dimensions.
MDR_DEFINE_ERROR(DimensionError);

/// A matrix required to be positive semidefinite is not.
MDR_DEFINE_ERROR(NotPsd);

/// A matrix required to be positive definite is not.
MDR_DEFINE_ERROR(NotPd);

/// A matrix that must be inverted is singular to working precision.
MDR_DEFINE_ERROR(SingularMatrix);

/// A required Loewner-order relation between matrices does not hold.
MDR_DEFINE_ERROR(OrderingViolation);

/// An iterative routine exhausted its iteration budget before reaching
/// its convergence tolerance.
MDR_DEFINE_ERROR(DidNotConverge);

/// A first-order optimality condition that must hold at a solution was
/// violated beyond tolerance (bad multiplier sign, stationarity residual).
MDR_DEFINE_ERROR(KKTViolation);

/// Internal consistency check failed; indicates a bug in this library.
MDR_DEFINE_ERROR(InternalError);

/// The requested operation is outside the supported problem family.
MDR_DEFINE_ERROR(Unsupported);

/// A structural identity that is guaranteed to hold for every valid input
/// failed numerically; the computed result would be meaningless.
MDR_DEFINE_ERROR(TheoryViolation);

/// Instance text could not be parsed; message carries the line number.
MDR_DEFINE_ERROR(ParseError);

#undef MDR_DEFINE_ERROR

} // namespace mdr

#endif
