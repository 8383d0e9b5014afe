#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mobgen/rng.hpp"

namespace mobgen::gmm {

struct Component {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct Mixture {
    std::vector<Component> components;

    std::size_t dimension() const
    {
        return components.empty() ? 0 : static_cast<std::size_t>(components[0].mean.size());
    }

    double log_likelihood(const Eigen::MatrixXd& samples) const; // samples: n x d
    Eigen::VectorXd sample(Rng& rng) const;

    /// Cholesky-validate every covariance (with a tiny jitter allowance).
    bool covariances_valid() const;
};

struct FitOptions {
    int max_em_iterations = 200;
    double tolerance = 1e-7;            // relative log-likelihood change
    double regularization = 1e-6;       // added to diagonals on degeneracy
    std::uint64_t seed = 0x9d2c5680;    // deterministic init
};

/// EM fit with k components. Throws FitError if the fit stays degenerate
/// after regularization.
Mixture fit(const Eigen::MatrixXd& samples, std::size_t k, const FitOptions& options = {});

/// Parameter count of a k-component d-dimensional mixture.
std::size_t free_parameters(std::size_t k, std::size_t d);

double bic(double log_likelihood, std::size_t k, std::size_t d, std::size_t n);

struct Selection {
    Mixture mixture;
    std::size_t components = 0;
    std::vector<double> bic_trace;
};

/// Grow k until the BIC score stops decreasing; returns the last improving fit.
Selection fit_with_bic(const Eigen::MatrixXd& samples, std::size_t max_components = 8,
                       const FitOptions& options = {});

} // namespace mobgen::gmm
