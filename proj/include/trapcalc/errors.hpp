#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trapcalc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidPolicy : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite input or an integrator that lost accuracy.
class NumericError : public Error {
public:
    using Error::Error;
};

/// A label lies outside the region where the truncated basis represents the
/// state faithfully. Carries the basis size that would be needed.
class TruncationRisk : public Error {
public:
    TruncationRisk(const std::string& what, std::size_t suggested_dim)
        : Error(what + " (suggested dim >= " + std::to_string(suggested_dim) + ")"),
          suggested_dim_(suggested_dim) {}

    std::size_t suggested_dim() const noexcept { return suggested_dim_; }

private:
    std::size_t suggested_dim_;
};

class QuadratureFailure : public Error {
public:
    QuadratureFailure(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class FrameSingularity : public Error {
public:
    FrameSingularity(const std::string& what, double t)
        : Error(what + " at t = " + std::to_string(t)), time_(t) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

class NoSpectrum : public Error {
public:
    using Error::Error;
};

class Unsupported : public Error {
public:
    using Error::Error;
};

/// Coincident ions under a kernel that diverges at zero separation.
class Singularity : public Error {
public:
    using Error::Error;
};

} // namespace trapcalc
