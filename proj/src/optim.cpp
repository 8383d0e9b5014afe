#include "mobgen/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>

#include "mobgen/errors.hpp"

// Spectral projected gradient (Barzilai-Borwein steps with a nonmonotone
// Armijo search). Projection-friendly and free of the curvature bookkeeping
// that quasi-Newton updates need at active bounds.

namespace mobgen::optim {

namespace {

constexpr double kAlphaMin = 1e-12;
constexpr double kAlphaMax = 1e12;

void project(std::vector<double>& x, const std::vector<double>& lo, const std::vector<double>& hi)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], lo[i], hi[i]);
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

/// Infinity norm of P(x - g) - x, the first-order stationarity measure.
double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& g,
                               const std::vector<double>& lo, const std::vector<double>& hi)
{
    double norm = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = std::clamp(x[i] - g[i], lo[i], hi[i]) - x[i];
        norm = std::max(norm, std::abs(step));
    }
    return norm;
}

} // namespace

Result minimize_box(const Objective& objective, std::vector<double> x0,
                    const std::vector<double>& lower, const std::vector<double>& upper,
                    const Options& options)
{
    const std::size_t n = x0.size();
    if (lower.size() != n || upper.size() != n) {
        throw ArgumentError("bound vectors must match the variable count");
    }
    project(x0, lower, upper);

    std::vector<double> x = std::move(x0);
    std::vector<double> grad(n, 0.0);
    double fx = objective(x, grad);

    Result result;
    result.x = x;
    result.value = fx;

    const std::size_t window = std::max(1, options.history);
    std::deque<double> recent_f{fx};

    double alpha = 1.0;
    {
        const double g0 = projected_gradient_norm(x, grad, lower, upper);
        if (g0 > 0.0) {
            alpha = std::clamp(1.0 / g0, kAlphaMin, kAlphaMax);
        }
    }

    std::vector<double> x_new(n), grad_new(n, 0.0), direction(n);
    double best_f = fx;
    std::vector<double> best_x = x;
    int since_best_improved = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (projected_gradient_norm(x, grad, lower, upper) < options.gradient_tolerance) {
            result.converged = true;
            break;
        }
        if (since_best_improved >= 30) {
            // The best value has not moved for a whole oscillation window:
            // numerically converged (typically a flat or degenerate region).
            x = best_x;
            fx = best_f;
            result.converged = true;
            break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            direction[i] = std::clamp(x[i] - alpha * grad[i], lower[i], upper[i]) - x[i];
        }
        const double slope = dot(grad, direction);
        if (slope >= 0.0) {
            result.converged = true; // nowhere downhill inside the box
            break;
        }

        const double f_ref = *std::max_element(recent_f.begin(), recent_f.end());
        double lambda = 1.0;
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t i = 0; i < n; ++i) {
                x_new[i] = x[i] + lambda * direction[i];
            }
            f_new = objective(x_new, grad_new);
            if (f_new <= f_ref + 1e-4 * lambda * slope) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            result.converged =
                projected_gradient_norm(x, grad, lower, upper) <
                std::max(options.gradient_tolerance, 1e-10);
            break;
        }

        // Barzilai-Borwein step length from the accepted move.
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = grad_new[i] - grad[i];
        }
        const double ss = dot(s, s);
        const double sy = dot(s, y);
        alpha = sy > 0.0 ? std::clamp(ss / sy, kAlphaMin, kAlphaMax) : kAlphaMax;

        if (best_f - f_new > options.function_tolerance * (std::abs(best_f) + 1.0)) {
            best_f = f_new;
            best_x = x_new;
            since_best_improved = 0;
        }
        else {
            ++since_best_improved;
        }

        x = x_new;
        grad = grad_new;
        fx = f_new;
        recent_f.push_back(fx);
        if (recent_f.size() > window) {
            recent_f.pop_front();
        }
        result.iterations = iter + 1;
    }

    if (best_f < fx) {
        x = best_x;
        fx = best_f;
    }
    result.x = std::move(x);
    result.value = fx;
    if (!result.converged) {
        result.converged =
            projected_gradient_norm(result.x, grad, lower, upper) < options.gradient_tolerance;
    }
    return result;
}

Result minimize_box_newton(const HessianObjective& objective, std::vector<double> x0,
                           const std::vector<double>& lower, const std::vector<double>& upper,
                           const Options& options)
{
    const std::size_t n = x0.size();
    if (lower.size() != n || upper.size() != n) {
        throw ArgumentError("bound vectors must match the variable count");
    }
    project(x0, lower, upper);

    std::vector<double> x = std::move(x0);
    std::vector<double> grad(n, 0.0), hess(n * n, 0.0);
    double fx = objective(x, grad, hess);

    Result result;
    result.x = x;
    result.value = fx;

    double damping = 0.0;
    int stagnant = 0;
    std::vector<double> x_new(n), grad_new(n, 0.0), hess_new(n * n, 0.0);
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (projected_gradient_norm(x, grad, lower, upper) < options.gradient_tolerance) {
            result.converged = true;
            break;
        }
        if (stagnant >= 3) {
            result.converged = true;
            break;
        }

        // Coordinates pinned at a bound with an inward-pointing gradient
        // hold still this iteration.
        std::vector<std::size_t> free;
        for (std::size_t i = 0; i < n; ++i) {
            const bool at_lo = x[i] <= lower[i] && grad[i] > 0.0;
            const bool at_hi = x[i] >= upper[i] && grad[i] < 0.0;
            if (!at_lo && !at_hi) {
                free.push_back(i);
            }
        }
        if (free.empty()) {
            result.converged = true;
            break;
        }

        const auto m = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd h(m, m);
        Eigen::VectorXd g(m);
        for (Eigen::Index a = 0; a < m; ++a) {
            g(a) = grad[free[static_cast<std::size_t>(a)]];
            for (Eigen::Index b = 0; b < m; ++b) {
                h(a, b) = hess[free[static_cast<std::size_t>(a)] * n +
                               free[static_cast<std::size_t>(b)]];
            }
        }
        const double scale = std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());

        // Levenberg loop: damp until the step is a descent direction.
        Eigen::VectorXd step;
        for (int attempt = 0; attempt < 60; ++attempt) {
            Eigen::MatrixXd damped = h;
            damped.diagonal().array() += damping * scale + 1e-12 * scale;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
            bool ok = ldlt.info() == Eigen::Success;
            if (ok) {
                step = ldlt.solve(-g);
                ok = step.allFinite() && g.dot(step) < 0.0;
            }
            if (ok) {
                break;
            }
            damping = damping == 0.0 ? 1e-6 : damping * 10.0;
        }

        double lambda = 1.0;
        bool accepted = false;
        double f_new = fx;
        for (int ls = 0; ls < 50; ++ls) {
            x_new = x;
            for (Eigen::Index a = 0; a < m; ++a) {
                x_new[free[static_cast<std::size_t>(a)]] += lambda * step(a);
            }
            project(x_new, lower, upper);
            bool moved = false;
            for (std::size_t i = 0; i < n; ++i) {
                if (x_new[i] != x[i]) {
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                break;
            }
            f_new = objective(x_new, grad_new, hess_new);
            if (f_new <= fx - 1e-4 * std::abs(lambda * g.dot(step))) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            damping = damping == 0.0 ? 1e-6 : damping * 10.0;
            if (damping > 1e12) {
                break;
            }
            continue;
        }
        damping = std::max(0.0, damping / 10.0 - 1e-12);

        if (fx - f_new <= options.function_tolerance * (std::abs(fx) + 1.0)) {
            ++stagnant;
        }
        else {
            stagnant = 0;
        }
        x = x_new;
        grad = grad_new;
        hess = hess_new;
        fx = f_new;
        result.iterations = iter + 1;
    }

    result.x = std::move(x);
    result.value = fx;
    if (!result.converged) {
        result.converged =
            projected_gradient_norm(result.x, grad, lower, upper) < options.gradient_tolerance;
    }
    return result;
}

} // namespace mobgen::optim
