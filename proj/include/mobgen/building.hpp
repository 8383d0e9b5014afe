#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mobgen/types.hpp"

namespace mobgen {

/// Index of each term in the linear attraction feature vector.
/// Slots 0-3 carry the landuse-gated footprint area, 4-7 the POI counts and
/// 8-11 the landuse indicator.
enum FeatureSlot : std::size_t {
    kAreaResidential = 0,
    kAreaIndustrial = 1,
    kAreaCommercial = 2,
    kAreaOther = 3,
    kPoiOffices = 4,
    kPoiShops = 5,
    kPoiSchools = 6,
    kPoiUniversities = 7,
    kUseResidential = 8,
    kUseIndustrial = 9,
    kUseCommercial = 10,
    kUseOther = 11,
};

inline constexpr std::size_t kFeatureCount = 12;

using FeatureVector = std::array<double, kFeatureCount>;

/// One destination candidate parsed from the map extract.
struct Building {
    std::int64_t id = 0;       // opaque; OSM way id in practice
    LonLat coordinates;        // footprint centroid
    double area = 0.0;         // m2
    double population = 0.0;   // assigned from census, 0 otherwise
    Landuse landuse = Landuse::none;
    std::uint32_t n_shops = 0;
    std::uint32_t n_offices = 0;
    std::uint32_t n_schools = 0;
    std::uint32_t n_universities = 0;
    bool in_focus_area = false;

    FeatureVector features() const;
};

/// Building table persisted as newline-delimited JSON, one object per line.
void save_buildings_ndjson(const std::vector<Building>& buildings,
                           const std::filesystem::path& path);
std::vector<Building> load_buildings_ndjson(const std::filesystem::path& path);

} // namespace mobgen
