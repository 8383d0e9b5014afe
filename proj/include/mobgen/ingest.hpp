#pragma once

#include <filesystem>
#include <vector>

#include "mobgen/building.hpp"
#include "mobgen/geo.hpp"
#include "mobgen/geojson.hpp"
#include "mobgen/osm.hpp"

namespace mobgen::ingest {

/// Focus-area parsing, re-exported from the GeoJSON reader.
inline geo::AreaGeometry parse_focus_area(const std::filesystem::path& file)
{
    return geojson::parse_focus_area(file);
}

/// Metric dilation of the focus area; dist == 0 is the identity.
geo::AreaGeometry buffer_area(const geo::AreaGeometry& area, double dist_m);

struct ExtractOptions {
    unsigned threads = 1;
};

/// One Building per object tagged `building` whose footprint intersects the
/// area. Landuse, POI counts and the focus flag are derived from the other
/// map objects; population starts at zero.
std::vector<Building> extract_buildings(const osm::OsmData& data, const geo::AreaGeometry& area,
                                        const ExtractOptions& options = {});

std::vector<Building> extract_buildings(const std::filesystem::path& osm_file,
                                        const geo::AreaGeometry& area,
                                        const ExtractOptions& options = {});

/// Distribute each census cell's population uniformly across the buildings
/// whose footprints intersect it. Buildings are matched by centroid-carrying
/// footprint; the input list is updated in place and returned.
std::vector<Building>& apply_census(std::vector<Building>& buildings,
                                    const std::vector<geojson::CensusCell>& cells,
                                    const osm::OsmData& data);

std::vector<Building>& apply_census(std::vector<Building>& buildings,
                                    const std::filesystem::path& census_file,
                                    const osm::OsmData& data,
                                    const std::string& population_property = "population");

} // namespace mobgen::ingest
