#pragma once

#include <functional>
#include <vector>

namespace mobgen::optim {

/// Objective callback: value at x, gradient written to `grad`.
using Objective = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

struct Options {
    int max_iterations = 500;
    double gradient_tolerance = 1e-7;  // on the projected gradient, inf-norm
    double function_tolerance = 1e-11; // relative decrease treated as stagnation
    int history = 10;                  // nonmonotone line-search window
};

struct Result {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Minimize a smooth objective subject to per-coordinate bounds with a
/// spectral projected gradient scheme. Deterministic for fixed inputs.
/// Bounds may be +-infinity.
Result minimize_box(const Objective& objective, std::vector<double> x0,
                    const std::vector<double>& lower, const std::vector<double>& upper,
                    const Options& options = {});

/// Objective with a dense Hessian (row-major n*n), for small problems.
using HessianObjective = std::function<double(const std::vector<double>& x,
                                              std::vector<double>& grad,
                                              std::vector<double>& hessian)>;

/// Damped projected Newton for low-dimensional boxes; quadratic local
/// convergence, Levenberg regularization away from convexity.
Result minimize_box_newton(const HessianObjective& objective, std::vector<double> x0,
                           const std::vector<double>& lower, const std::vector<double>& upper,
                           const Options& options = {});

} // namespace mobgen::optim
