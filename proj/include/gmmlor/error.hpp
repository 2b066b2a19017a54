#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gmmlor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A covariance matrix is singular or its projection collapsed to zero.
class SingularCovarianceError : public Error {
public:
    using Error::Error;
};

/// A least-squares normal matrix is too ill-conditioned to solve
/// (for example, all lines of response are nearly parallel).
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

/// A mixture component lost (almost) all of its responsibility mass.
class ComponentCollapseError : public Error {
public:
    ComponentCollapseError(std::size_t component, const std::string& what)
        : Error(what), component_(component) {}

    std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

/// Malformed or unsupported input file.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace gmmlor
