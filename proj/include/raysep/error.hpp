// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace raysep {

// Invalid argument or violated precondition. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// File or stream failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure could not produce a usable result. Maps to exit code 4.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The residual bound of a constrained sparse program cannot be met.
class InfeasibleError : public NumericalError {
public:
    InfeasibleError(const std::string& what, double min_residual)
        : NumericalError(what), min_residual_(min_residual) {}

    double min_residual() const noexcept { return min_residual_; }

private:
    double min_residual_;
};

}  // namespace raysep
