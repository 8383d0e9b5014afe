#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mobgen/bundle.hpp"
#include "mobgen/geo.hpp"
#include "mobgen/simulator.hpp"

namespace fixtures {

/// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path file(const std::string& name) const { return path / name; }
};

/// Axis-aligned square focus area centered on `center`.
mobgen::geo::AreaGeometry square_area(const mobgen::LonLat& center, double half_side_m);

void write_square_geojson(const std::filesystem::path& file, const mobgen::LonLat& center,
                          double half_side_m);

/// Hand-enumerable 5-building map with landuse zones, POIs and a road,
/// exercised by the ingest tests (XML flavor).
std::string toy_osm_xml();

/// The same map content encoded as an OSM PBF byte stream.
std::string toy_osm_pbf();

/// Clustered synthetic town; deterministic per seed. Buildings carry mixed
/// landuse, areas and POI counts and are flagged in-focus.
std::vector<mobgen::Building> toy_town(std::size_t n, std::uint64_t seed,
                                       const mobgen::LonLat& center, double spread_m);

/// Assemble a runnable model from raw buildings (beeline distances).
mobgen::sim::Model make_model(std::vector<mobgen::Building> buildings,
                              const mobgen::geo::AreaGeometry& focus,
                              const mobgen::AttractionCoeffs& coeffs,
                              double grid_threshold_m = 150.0);

/// Bundle with a single all-home chain; useful for degenerate-schedule tests.
mobgen::CalibrationBundle all_home_bundle();

} // namespace fixtures
