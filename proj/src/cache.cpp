#include "mobgen/cache.hpp"

#include <cstdlib>
#include <optional>
#include <sstream>

#include "mobgen/errors.hpp"
#include "mobgen/ingest.hpp"
#include "mobgen/util.hpp"

namespace mobgen::cache {

std::filesystem::path cache_directory()
{
    if (const char* env = std::getenv("MOBGEN_CACHE"); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::filesystem::path(".mobgen_cache");
}

namespace {

std::string key_of(std::initializer_list<std::string> parts)
{
    std::string joined;
    for (const auto& p : parts) {
        joined += p;
        joined += '\x1f';
    }
    return util::sha256_hex(joined).substr(0, 24);
}

std::string fmt(double v)
{
    std::ostringstream ss;
    ss << v;
    return ss.str();
}

} // namespace

Prepared prepare(const PrepareRequest& request)
{
    for (const auto* path : {&request.osm_file, &request.area_file}) {
        if (!std::filesystem::exists(*path)) {
            throw IoError("input file does not exist: " + path->string());
        }
    }
    if (request.census_file && !std::filesystem::exists(*request.census_file)) {
        throw IoError("input file does not exist: " + request.census_file->string());
    }

    const auto dir = cache_directory();
    std::filesystem::create_directories(dir);

    const std::string osm_hash = util::sha256_file_hex(request.osm_file);
    const std::string area_hash = util::sha256_file_hex(request.area_file);
    const std::string census_hash =
        request.census_file ? util::sha256_file_hex(*request.census_file) : "none";

    const std::string buildings_key =
        key_of({"buildings-v1", osm_hash, area_hash, census_hash, request.census_property,
                fmt(request.buffer_m)});
    const std::string graph_key = key_of({"graph-v1", osm_hash});
    const std::string grid_key = key_of({"grid-v1", buildings_key, fmt(request.grid_threshold_m)});
    const std::string matrix_key = key_of({"matrix-v1", graph_key, grid_key,
                                           fmt(request.distance_limit_m),
                                           fmt(routing::kDefaultBinWidthM)});

    Prepared prepared;
    prepared.buildings_path = dir / ("buildings-" + buildings_key + ".ndjson");
    const auto graph_path = dir / ("graph-" + graph_key + ".bin");
    prepared.grid_path = dir / ("grid-" + grid_key + ".json");
    prepared.matrix_path = dir / ("matrix-" + matrix_key + ".bin");

    // The area geometry is cheap to rebuild and needed for grid tiers.
    geo::AreaGeometry area = ingest::parse_focus_area(request.area_file);
    if (request.buffer_m > 0.0) {
        area = ingest::buffer_area(area, request.buffer_m);
    }

    std::optional<osm::OsmData> osm_data; // parsed lazily, at most once
    auto ensure_osm = [&]() -> const osm::OsmData& {
        if (!osm_data) {
            util::log_info("parsing OSM file " + request.osm_file.string());
            osm_data = osm::read_file(request.osm_file);
        }
        return *osm_data;
    };

    if (std::filesystem::exists(prepared.buildings_path)) {
        util::log_info("cache hit: buildings (" + buildings_key + ")");
        prepared.model.buildings = load_buildings_ndjson(prepared.buildings_path);
        prepared.buildings_cached = true;
    }
    else {
        ingest::ExtractOptions options;
        options.threads = request.threads;
        prepared.model.buildings = ingest::extract_buildings(ensure_osm(), area, options);
        if (request.census_file) {
            ingest::apply_census(prepared.model.buildings, *request.census_file, ensure_osm(),
                                 request.census_property);
        }
        save_buildings_ndjson(prepared.model.buildings, prepared.buildings_path);
    }

    if (std::filesystem::exists(graph_path)) {
        util::log_info("cache hit: road graph (" + graph_key + ")");
        prepared.graph = routing::RoadGraph::load(graph_path);
        prepared.graph_cached = true;
    }
    else {
        prepared.graph = routing::build_road_graph(ensure_osm());
        prepared.graph.save(graph_path);
    }

    if (std::filesystem::exists(prepared.grid_path)) {
        util::log_info("cache hit: grid (" + grid_key + ")");
        prepared.model.cells = grid::load_grid(prepared.grid_path, prepared.model.buildings);
        prepared.grid_cached = true;
    }
    else {
        prepared.model.cells = grid::build_grid(prepared.model.buildings, area,
                                                request.grid_threshold_m, request.threads);
        grid::save_grid(prepared.model.cells, prepared.grid_path);
    }
    prepared.model.building_cell =
        grid::building_cell_index(prepared.model.cells, prepared.model.buildings.size());

    std::vector<LonLat> centroids;
    centroids.reserve(prepared.model.cells.size());
    for (const auto& cell : prepared.model.cells) {
        centroids.push_back(cell.centroid);
    }

    if (request.beeline) {
        util::log_warn("beeline distance metric: no matrix precomputation; "
                       "expect skewed distances compared to routed runs");
        prepared.matrix_path.clear();
        prepared.model.distances = std::make_unique<dest::BeelineDistance>(std::move(centroids));
    }
    else if (std::filesystem::exists(prepared.matrix_path)) {
        util::log_info("cache hit: distance matrix (" + matrix_key + ")");
        auto matrix = routing::DistanceMatrix::load(prepared.matrix_path);
        if (matrix.size() != prepared.model.cells.size()) {
            throw ModelLoadError("cached distance matrix does not match the grid");
        }
        prepared.model.distances =
            std::make_unique<dest::OwningMatrixDistance>(std::move(matrix));
        prepared.matrix_cached = true;
    }
    else {
        routing::MatrixOptions options;
        options.limit_m = request.distance_limit_m;
        options.threads = request.threads;
        auto matrix = routing::distance_matrix(prepared.graph, centroids, options);
        matrix.save(prepared.matrix_path);
        prepared.model.distances = std::make_unique<dest::OwningMatrixDistance>(std::move(matrix));
    }

    for (const auto& b : prepared.model.buildings) {
        if (b.population > 0.0) {
            prepared.model.census_present = true;
            break;
        }
    }
    return prepared;
}

} // namespace mobgen::cache
