#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace abk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A vector or matrix had the wrong shape for the operation.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// An object was requested on a chart it is not defined on.
class ChartError : public Error {
public:
    using Error::Error;
};

/// An operation's precondition was violated (empty sample list, lambda <= 0, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A map returned NaN or infinity at a finite-difference probe.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, Eigen::VectorXd probe)
        : Error(what), probe_(std::move(probe)) {}

    const Eigen::VectorXd& probe() const noexcept { return probe_; }

private:
    Eigen::VectorXd probe_;
};

} // namespace abk
