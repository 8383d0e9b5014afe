#pragma once

#include <array>
#include <span>

#include "mobgen/building.hpp"
#include "mobgen/types.hpp"

namespace mobgen {

/// Per-purpose coefficients of the linear attraction function. All entries
/// are non-negative; a building with no features keeps weight one.
struct AttractionCoeffs {
    std::array<std::array<double, kFeatureCount>, kActivityCount> theta{};

    std::span<const double, kFeatureCount> for_purpose(Purpose p) const
    {
        return theta[static_cast<std::size_t>(p)];
    }
    std::array<double, kFeatureCount>& mutable_for_purpose(Purpose p)
    {
        return theta[static_cast<std::size_t>(p)];
    }

    /// Shipped German-wide defaults.
    static AttractionCoeffs defaults();
};

/// Attraction of an aggregate with `unit_count` buildings and summed feature
/// vector `x`: unit_count + theta . x. A single building has unit_count 1.
double attraction_value(std::span<const double, kFeatureCount> theta, const FeatureVector& x,
                        double unit_count = 1.0);

/// Attraction of one building for a purpose.
double attraction(const Building& b, Purpose purpose, const AttractionCoeffs& coeffs);

} // namespace mobgen
