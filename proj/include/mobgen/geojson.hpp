#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mobgen/geo.hpp"

namespace mobgen::geojson {

/// One census geometry with its population count.
struct CensusCell {
    geo::MultiPolygon geometry; // lon/lat
    double population = 0.0;
};

/// Parse the focus-area GeoJSON: the union of all polygonal geometries in
/// the file (Feature/FeatureCollection wrappers and raw geometries accepted).
geo::AreaGeometry parse_focus_area(const std::filesystem::path& file);

/// Parse census cells. `population_property` names the numeric property
/// holding each cell's population.
std::vector<CensusCell> parse_census(const std::filesystem::path& file,
                                     const std::string& population_property = "population");

} // namespace mobgen::geojson
