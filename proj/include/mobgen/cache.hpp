#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mobgen/routing.hpp"
#include "mobgen/simulator.hpp"

namespace mobgen::cache {

/// Inputs that shape the prepared artifacts. Every artifact is stored under
/// a content-hash key, so stale entries can never be picked up.
struct PrepareRequest {
    std::filesystem::path osm_file;
    std::filesystem::path area_file;
    std::optional<std::filesystem::path> census_file;
    std::string census_property = "population";
    double buffer_m = 0.0;
    double grid_threshold_m = grid::kDefaultGridThresholdM;
    double distance_limit_m = routing::kDefaultDistanceLimitM;
    bool beeline = false; // skip the matrix entirely
    unsigned threads = 1;
};

/// Default cache directory; the MOBGEN_CACHE environment variable overrides.
std::filesystem::path cache_directory();

struct Prepared {
    sim::Model model;
    routing::RoadGraph graph;
    std::filesystem::path buildings_path;
    std::filesystem::path grid_path;
    std::filesystem::path matrix_path; // empty in beeline mode
    bool buildings_cached = false;
    bool graph_cached = false;
    bool grid_cached = false;
    bool matrix_cached = false;
};

/// Build (or re-load) buildings, road graph, grid and distance matrix.
/// Artifacts are reused whenever their key (input hashes + parameters)
/// matches a previous run.
Prepared prepare(const PrepareRequest& request);

} // namespace mobgen::cache
