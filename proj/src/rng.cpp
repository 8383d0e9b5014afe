#include "mobgen/rng.hpp"

#include <algorithm>

#include "mobgen/errors.hpp"

namespace mobgen {

std::size_t Rng::discrete(std::span<const double> weights)
{
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    if (!(total > 0.0)) {
        throw DegenerateChoiceError("discrete draw over all-zero weights");
    }
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) {
            return i;
        }
    }
    // Floating point slack: fall back to the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

std::size_t Rng::discrete_cumulative(std::span<const double> cumulative)
{
    if (cumulative.empty() || !(cumulative.back() > 0.0)) {
        throw DegenerateChoiceError("cumulative draw over empty or zero-total weights");
    }
    double u = uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) {
        --it;
    }
    return static_cast<std::size_t>(it - cumulative.begin());
}

} // namespace mobgen
