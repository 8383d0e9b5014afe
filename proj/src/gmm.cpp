#include "mobgen/gmm.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "mobgen/errors.hpp"

namespace mobgen::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

struct CholeskyCache {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_det = 0.0;
};

CholeskyCache decompose(const Eigen::MatrixXd& cov, double regularization)
{
    CholeskyCache c;
    Eigen::MatrixXd m = cov;
    for (int attempt = 0; attempt < 6; ++attempt) {
        c.llt.compute(m);
        if (c.llt.info() == Eigen::Success) {
            c.log_det = 0.0;
            const auto& L = c.llt.matrixL();
            for (int i = 0; i < m.rows(); ++i) {
                c.log_det += 2.0 * std::log(L(i, i));
            }
            if (std::isfinite(c.log_det)) {
                return c;
            }
        }
        m.diagonal().array() += regularization * std::pow(10.0, attempt);
    }
    throw FitError("covariance matrix is not positive definite");
}

double log_gauss(const Eigen::VectorXd& x, const Eigen::VectorXd& mean, const CholeskyCache& chol)
{
    const Eigen::VectorXd diff = x - mean;
    const Eigen::VectorXd solved = chol.llt.solve(diff);
    const double maha = diff.dot(solved);
    return -0.5 * (static_cast<double>(x.size()) * kLog2Pi + chol.log_det + maha);
}

/// Deterministic initial means: overall mean, then farthest-point sweeps.
std::vector<Eigen::VectorXd> initial_means(const Eigen::MatrixXd& samples, std::size_t k)
{
    const std::size_t n = static_cast<std::size_t>(samples.rows());
    std::vector<Eigen::VectorXd> means;
    means.push_back(samples.colwise().mean().transpose());
    while (means.size() < k) {
        std::size_t best = 0;
        double best_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& m : means) {
                nearest = std::min(nearest, (samples.row(i).transpose() - m).squaredNorm());
            }
            if (nearest > best_d) {
                best_d = nearest;
                best = i;
            }
        }
        means.push_back(samples.row(best).transpose());
    }
    return means;
}

} // namespace

double Mixture::log_likelihood(const Eigen::MatrixXd& samples) const
{
    if (components.empty()) {
        throw FitError("log likelihood of an empty mixture");
    }
    std::vector<CholeskyCache> chol;
    chol.reserve(components.size());
    for (const auto& c : components) {
        chol.push_back(decompose(c.covariance, 1e-10));
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        const Eigen::VectorXd x = samples.row(i).transpose();
        double max_term = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(components.size());
        for (std::size_t c = 0; c < components.size(); ++c) {
            terms[c] = std::log(components[c].weight) + log_gauss(x, components[c].mean, chol[c]);
            max_term = std::max(max_term, terms[c]);
        }
        double sum = 0.0;
        for (double t : terms) {
            sum += std::exp(t - max_term);
        }
        total += max_term + std::log(sum);
    }
    return total;
}

Eigen::VectorXd Mixture::sample(Rng& rng) const
{
    if (components.empty()) {
        return Eigen::VectorXd(0);
    }
    std::vector<double> weights(components.size());
    for (std::size_t i = 0; i < components.size(); ++i) {
        weights[i] = components[i].weight;
    }
    const auto& comp = components[rng.discrete(weights)];
    Eigen::LLT<Eigen::MatrixXd> llt(comp.covariance);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd m = comp.covariance;
        m.diagonal().array() += 1e-10;
        llt.compute(m);
        if (llt.info() != Eigen::Success) {
            throw ModelLoadError("mixture covariance is not positive semi-definite");
        }
    }
    Eigen::VectorXd z(comp.mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = rng.normal();
    }
    return comp.mean + llt.matrixL() * z;
}

bool Mixture::covariances_valid() const
{
    for (const auto& c : components) {
        Eigen::MatrixXd m = c.covariance;
        m.diagonal().array() += 1e-9;
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success) {
            return false;
        }
        if (c.covariance.rows() != c.covariance.cols() ||
            !c.covariance.isApprox(c.covariance.transpose(), 1e-8)) {
            return false;
        }
    }
    return true;
}

std::size_t free_parameters(std::size_t k, std::size_t d)
{
    return (k - 1) + k * d + k * d * (d + 1) / 2;
}

double bic(double log_likelihood, std::size_t k, std::size_t d, std::size_t n)
{
    return -2.0 * log_likelihood +
           static_cast<double>(free_parameters(k, d)) * std::log(static_cast<double>(n));
}

Mixture fit(const Eigen::MatrixXd& samples, std::size_t k, const FitOptions& options)
{
    const std::size_t n = static_cast<std::size_t>(samples.rows());
    const std::size_t d = static_cast<std::size_t>(samples.cols());
    if (n == 0 || k == 0) {
        throw ArgumentError("mixture fit needs samples and at least one component");
    }
    if (d == 0) {
        return Mixture{};
    }

    Eigen::MatrixXd base_cov = Eigen::MatrixXd::Zero(d, d);
    const Eigen::RowVectorXd overall_mean = samples.colwise().mean();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::RowVectorXd diff = samples.row(i) - overall_mean;
        base_cov += diff.transpose() * diff;
    }
    base_cov /= static_cast<double>(n);
    base_cov.diagonal().array() += options.regularization;

    Mixture mix;
    for (const auto& mean : initial_means(samples, k)) {
        Component c;
        c.weight = 1.0 / static_cast<double>(k);
        c.mean = mean;
        c.covariance = base_cov;
        mix.components.push_back(std::move(c));
    }

    Eigen::MatrixXd resp(n, k);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_em_iterations; ++iter) {
        // E step
        std::vector<CholeskyCache> chol;
        chol.reserve(k);
        for (auto& c : mix.components) {
            chol.push_back(decompose(c.covariance, options.regularization));
        }
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const Eigen::VectorXd x = samples.row(i).transpose();
            double max_term = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                resp(i, c) = std::log(std::max(mix.components[c].weight, 1e-300)) +
                             log_gauss(x, mix.components[c].mean, chol[c]);
                max_term = std::max(max_term, resp(i, c));
            }
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                sum += std::exp(resp(i, c) - max_term);
            }
            const double log_norm = max_term + std::log(sum);
            for (std::size_t c = 0; c < k; ++c) {
                resp(i, c) = std::exp(resp(i, c) - log_norm);
            }
            ll += log_norm;
        }

        // M step
        for (std::size_t c = 0; c < k; ++c) {
            const double nk = resp.col(c).sum();
            if (nk < 1e-8) {
                // Dead component: re-seed on the worst-fit sample.
                std::size_t worst = 0;
                double worst_r = 2.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp.row(i).maxCoeff();
                    if (r < worst_r) {
                        worst_r = r;
                        worst = i;
                    }
                }
                mix.components[c].mean = samples.row(worst).transpose();
                mix.components[c].covariance = base_cov;
                mix.components[c].weight = 1.0 / static_cast<double>(n);
                continue;
            }
            Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
            for (std::size_t i = 0; i < n; ++i) {
                mean += resp(i, c) * samples.row(i).transpose();
            }
            mean /= nk;
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
            for (std::size_t i = 0; i < n; ++i) {
                const Eigen::VectorXd diff = samples.row(i).transpose() - mean;
                cov += resp(i, c) * diff * diff.transpose();
            }
            cov /= nk;
            cov.diagonal().array() += options.regularization;
            mix.components[c].weight = nk / static_cast<double>(n);
            mix.components[c].mean = std::move(mean);
            mix.components[c].covariance = std::move(cov);
        }

        if (std::abs(ll - prev_ll) < options.tolerance * (std::abs(ll) + 1.0)) {
            break;
        }
        prev_ll = ll;
    }
    return mix;
}

Selection fit_with_bic(const Eigen::MatrixXd& samples, std::size_t max_components,
                       const FitOptions& options)
{
    const std::size_t n = static_cast<std::size_t>(samples.rows());
    const std::size_t d = static_cast<std::size_t>(samples.cols());
    if (d == 0) {
        return Selection{Mixture{}, 0, {}};
    }

    Selection sel;
    double best_bic = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= max_components && k <= n; ++k) {
        Mixture m = fit(samples, k, options);
        const double score = bic(m.log_likelihood(samples), k, d, n);
        sel.bic_trace.push_back(score);
        if (score < best_bic) {
            best_bic = score;
            sel.mixture = std::move(m);
            sel.components = k;
        }
        else {
            break; // BIC stopped decreasing
        }
    }
    return sel;
}

} // namespace mobgen::gmm
