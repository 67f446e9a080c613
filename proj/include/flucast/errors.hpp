#pragma once

#include <stdexcept>
#include <string>

namespace flucast {

// Bad input: malformed labels, out-of-range values, inconsistent shapes.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Not enough history / training rows to fit something yet.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// An iterative solver stopped at its cap without meeting tolerance.
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace flucast
