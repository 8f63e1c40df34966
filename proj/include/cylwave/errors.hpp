#pragma once

#include <stdexcept>

namespace cylwave {

/// Iterative method exhausted its budget before reaching the tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stationary point whose Hessian is (numerically) singular.
class DegenerateCriticalPoint : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace cylwave
