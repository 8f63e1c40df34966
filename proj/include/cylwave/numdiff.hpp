#pragma once

#include <cmath>

namespace cylwave {

/// Default central-difference step at x.
inline double fd_step(double x) { return 1e-5 * (1.0 + std::fabs(x)); }

/// Central first derivative with one Richardson extrapolation.
template <typename F>
auto fd_first(F&& f, double x, double h = 0.0) {
    if (h == 0.0) h = fd_step(x);
    auto d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    auto d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

/// Central second derivative with one Richardson extrapolation.
template <typename F>
auto fd_second(F&& f, double x, double h = 0.0) {
    if (h == 0.0) h = 100.0 * fd_step(x);
    auto f0 = f(x);
    auto d1 = (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    auto d2 = (f(x + 0.5 * h) - 2.0 * f0 + f(x - 0.5 * h)) / (0.25 * h * h);
    return (4.0 * d2 - d1) / 3.0;
}

}  // namespace cylwave
