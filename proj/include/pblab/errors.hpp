#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pblab {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite numbers, out-of-range parameters, malformed configurations.
class InvalidInput : public Error
{
public:
    using Error::Error;
};

class DimensionMismatch : public InvalidInput
{
public:
    using InvalidInput::InvalidInput;
};

/// A precondition of a bound or tuning routine is not met (e.g. c <= 1 for
/// the balanced loss, or an unconverged solution handed to certification).
class InvalidPremise : public InvalidInput
{
public:
    using InvalidInput::InvalidInput;
};

/// The modelling assumptions are violated by the data: Y = 0, a vanishing
/// noise correlation term, a nontrivial common kernel of the penalty matrices.
class AssumptionViolated : public Error
{
public:
    using Error::Error;
};

class KernelIntersectionError : public AssumptionViolated
{
public:
    using AssumptionViolated::AssumptionViolated;
};

/// Zero residual under the square-root link.
class DegenerateInput : public AssumptionViolated
{
public:
    using AssumptionViolated::AssumptionViolated;
};

/// An iterative routine ran out of iterations. Carries the iterate trace.
class NonConvergence : public Error
{
public:
    NonConvergence(const std::string& what, std::vector<Eigen::VectorXd> trace = {})
        : Error(what), trace_(std::move(trace))
    {}

    const std::vector<Eigen::VectorXd>& trace() const noexcept { return trace_; }

private:
    std::vector<Eigen::VectorXd> trace_;
};

} // namespace pblab
