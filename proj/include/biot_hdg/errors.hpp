#pragma once

#include <stdexcept>
#include <string>

namespace biot_hdg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PointOutsideDomain : public Error {
public:
    PointOutsideDomain(double x, double y)
        : Error("point (" + std::to_string(x) + ", " + std::to_string(y) + ") lies outside the mesh") {}
};

class UnsupportedOrder : public Error {
public:
    explicit UnsupportedOrder(const std::string& what) : Error("unsupported order: " + what) {}
};

class InvalidDegree : public Error {
public:
    explicit InvalidDegree(int k) : Error("polynomial degree must be >= 1, got " + std::to_string(k)) {}
};

/// The displacement dual functionals are not unisolvent on an element.
class SingularDualSystem : public Error {
public:
    explicit SingularDualSystem(int element)
        : Error("singular displacement dual system on element " + std::to_string(element)), element_(element) {}
    int element() const noexcept { return element_; }

private:
    int element_;
};

/// An element-local block could not be factored during static condensation.
class LocalBlockSingular : public Error {
public:
    explicit LocalBlockSingular(int element)
        : Error("singular element-local block on element " + std::to_string(element)), element_(element) {}
    int element() const noexcept { return element_; }

private:
    int element_;
};

class SingularMatrix : public Error {
public:
    explicit SingularMatrix(long pivot)
        : Error("sparse factorization hit a zero pivot at index " + std::to_string(pivot)), pivot_(pivot) {}
    long pivot() const noexcept { return pivot_; }

private:
    long pivot_;
};

class ResidualTooLarge : public Error {
public:
    explicit ResidualTooLarge(double residual)
        : Error("linear solve residual too large: " + std::to_string(residual)), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace biot_hdg
