#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mobgen/attraction.hpp"
#include "mobgen/building.hpp"
#include "mobgen/geo.hpp"

namespace mobgen::grid {

inline constexpr double kDefaultGridThresholdM = 150.0;
inline constexpr double kTierWidthM = 10000.0;

/// Cluster of buildings used for two-stage destination sampling.
struct GridCell {
    std::uint32_t id = 0;
    std::vector<std::uint32_t> members; // indices into the building list
    LonLat centroid;                    // unweighted mean of member coordinates
    int tier = 0;
    FeatureVector feature_sums{};       // per-slot sums over members
    double member_count = 0.0;
    std::array<double, kActivityCount> attraction{}; // per purpose, filled by aggregate_attractions
};

/// Planar point clustering. Repeatedly bisects the cluster with the largest
/// total dispersion until the mean point-to-centroid distance over all points
/// drops below `threshold` (same length unit as the points).
std::vector<std::vector<std::size_t>> bisecting_kmeans(const std::vector<geo::XY>& points,
                                                       double threshold);

/// Tiered clustering of the building list: focus buildings at the base
/// threshold, buffer buildings in 10 km rings with the threshold doubling
/// per ring. Cells carry aggregated features; attraction aggregation runs
/// separately once the coefficients are known.
std::vector<GridCell> build_grid(const std::vector<Building>& buildings,
                                 const geo::AreaGeometry& focus,
                                 double base_threshold_m = kDefaultGridThresholdM,
                                 unsigned threads = 1);

/// Fill per-purpose aggregated attraction from the member buildings.
void aggregate_attractions(std::vector<GridCell>& cells, const std::vector<Building>& buildings,
                           const AttractionCoeffs& coeffs);

/// Index of the cell each building belongs to.
std::vector<std::uint32_t> building_cell_index(const std::vector<GridCell>& cells,
                                               std::size_t building_count);

void save_grid(const std::vector<GridCell>& cells, const std::filesystem::path& path);
std::vector<GridCell> load_grid(const std::filesystem::path& path,
                                const std::vector<Building>& buildings);

} // namespace mobgen::grid
