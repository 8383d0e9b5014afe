#include "support/fixtures.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "fileformat.pb.h"
#include "osmformat.pb.h"

#include "mobgen/grid.hpp"
#include "mobgen/rng.hpp"
#include "mobgen/util.hpp"

namespace fixtures {

using namespace mobgen;

TempDir::TempDir()
{
    auto base = std::filesystem::temp_directory_path();
    static std::atomic<unsigned> counter{0};
    path = base / ("mobgen-test-" + std::to_string(::getpid()) + "-" +
                   std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
}

geo::AreaGeometry square_area(const LonLat& center, double half_side_m)
{
    geo::Projection proj(center);
    geo::Polygon poly;
    for (auto [dx, dy] : {std::pair{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}) {
        const LonLat corner = proj.unproject(geo::XY{dx * half_side_m, dy * half_side_m});
        boost::geometry::append(poly.outer(), geo::XY{corner.lon, corner.lat});
    }
    boost::geometry::correct(poly);
    return geo::AreaGeometry(geo::MultiPolygon{poly}, geo::AreaGeometry::Role::focus);
}

void write_square_geojson(const std::filesystem::path& file, const LonLat& center,
                          double half_side_m)
{
    geo::Projection proj(center);
    std::ostringstream out;
    out << R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},)"
        << R"("geometry":{"type":"Polygon","coordinates":[[)";
    bool first = true;
    for (auto [dx, dy] : {std::pair{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0},
                          std::pair{-1.0, -1.0}}) {
        const LonLat corner = proj.unproject(geo::XY{dx * half_side_m, dy * half_side_m});
        if (!first) {
            out << ",";
        }
        first = false;
        out << "[" << corner.lon << "," << corner.lat << "]";
    }
    out << "]]}}]}";
    util::write_file(file, out.str());
}

namespace {

struct ToyEntities {
    struct Node {
        std::int64_t id;
        double lon, lat;
        std::vector<std::pair<std::string, std::string>> tags;
    };
    struct Way {
        std::int64_t id;
        std::vector<std::int64_t> refs;
        std::vector<std::pair<std::string, std::string>> tags;
    };
    std::vector<Node> nodes;
    std::vector<Way> ways;
};

/// Square building (or zone) with corners at center +- half degrees.
void add_rect(ToyEntities& e, std::int64_t way_id, std::int64_t first_node_id, double lon,
              double lat, double half,
              std::vector<std::pair<std::string, std::string>> tags)
{
    const double c[4][2] = {{lon - half, lat - half},
                            {lon + half, lat - half},
                            {lon + half, lat + half},
                            {lon - half, lat + half}};
    ToyEntities::Way way;
    way.id = way_id;
    for (int i = 0; i < 4; ++i) {
        e.nodes.push_back({first_node_id + i, c[i][0], c[i][1], {}});
        way.refs.push_back(first_node_id + i);
    }
    way.refs.push_back(first_node_id);
    way.tags = std::move(tags);
    e.ways.push_back(std::move(way));
}

/// The shared 5-building toy map (plus one out-of-area building, one stray
/// shop node, one residential road and one footway).
ToyEntities toy_entities()
{
    ToyEntities e;
    const double b = 1e-4; // building half-side, degrees
    const double z = 5e-4; // landuse zone half-side

    add_rect(e, 101, 1000, 9.9980, 49.9980, b, {{"building", "yes"}});
    add_rect(e, 102, 1010, 9.9990, 50.0005, b, {{"building", "yes"}});
    add_rect(e, 103, 1020, 10.0010, 49.9990, b, {{"building", "yes"}});
    add_rect(e, 104, 1030, 10.0000, 50.0015, b, {{"building", "yes"}});
    add_rect(e, 105, 1040, 10.0020, 50.0020, b, {{"building", "yes"}});
    add_rect(e, 106, 1050, 10.1000, 50.1000, b, {{"building", "yes"}}); // outside focus

    add_rect(e, 201, 2000, 9.9980, 49.9980, z, {{"landuse", "residential"}});
    add_rect(e, 202, 2010, 9.9990, 50.0005, z, {{"landuse", "retail"}});
    add_rect(e, 203, 2020, 10.0010, 49.9990, z, {{"landuse", "industrial"}});
    add_rect(e, 204, 2030, 10.0000, 49.9960, z, {{"landuse", "forest"}}); // unmapped class

    e.nodes.push_back({301, 9.9990, 50.0005, {{"shop", "supermarket"}}});
    e.nodes.push_back({302, 10.0010, 49.9990, {{"office", "company"}}});
    e.nodes.push_back({303, 10.0000, 50.0015, {{"amenity", "school"}}});
    e.nodes.push_back({304, 10.0020, 50.0020, {{"amenity", "university"}}});
    e.nodes.push_back({305, 10.00195, 50.00195, {{"shop", "bakery"}}});
    e.nodes.push_back({306, 10.00205, 50.00205, {{"shop", "butcher"}}});
    e.nodes.push_back({307, 9.9960, 50.0030, {{"shop", "kiosk"}}}); // outside every building

    e.nodes.push_back({401, 9.9970, 49.9970, {}});
    e.nodes.push_back({402, 10.0000, 50.0000, {}});
    e.nodes.push_back({403, 10.0030, 50.0030, {}});
    e.ways.push_back({451, {401, 402, 403}, {{"highway", "residential"}}});

    e.nodes.push_back({404, 9.9970, 50.0030, {}});
    e.nodes.push_back({405, 10.0030, 49.9970, {}});
    e.ways.push_back({452, {404, 405}, {{"highway", "footway"}}});
    return e;
}

} // namespace

std::string toy_osm_xml()
{
    const ToyEntities e = toy_entities();
    std::ostringstream out;
    out.precision(10);
    out << "<?xml version='1.0' encoding='UTF-8'?>\n<osm version=\"0.6\" generator=\"toy\">\n";
    for (const auto& n : e.nodes) {
        out << "  <node id=\"" << n.id << "\" lat=\"" << n.lat << "\" lon=\"" << n.lon << "\"";
        if (n.tags.empty()) {
            out << "/>\n";
        }
        else {
            out << ">\n";
            for (const auto& [k, v] : n.tags) {
                out << "    <tag k=\"" << k << "\" v=\"" << v << "\"/>\n";
            }
            out << "  </node>\n";
        }
    }
    for (const auto& w : e.ways) {
        out << "  <way id=\"" << w.id << "\">\n";
        for (auto ref : w.refs) {
            out << "    <nd ref=\"" << ref << "\"/>\n";
        }
        for (const auto& [k, v] : w.tags) {
            out << "    <tag k=\"" << k << "\" v=\"" << v << "\"/>\n";
        }
        out << "  </way>\n";
    }
    out << "</osm>\n";
    return out.str();
}

namespace {

std::string frame_blob(const std::string& type, const google::protobuf::Message& payload)
{
    OSMPBF::Blob blob;
    blob.set_raw(payload.SerializeAsString());
    blob.set_raw_size(static_cast<int>(blob.raw().size()));
    const std::string blob_bytes = blob.SerializeAsString();

    OSMPBF::BlobHeader header;
    header.set_type(type);
    header.set_datasize(static_cast<int>(blob_bytes.size()));
    const std::string header_bytes = header.SerializeAsString();

    std::string out;
    const std::uint32_t len = static_cast<std::uint32_t>(header_bytes.size());
    out.push_back(static_cast<char>((len >> 24) & 0xff));
    out.push_back(static_cast<char>((len >> 16) & 0xff));
    out.push_back(static_cast<char>((len >> 8) & 0xff));
    out.push_back(static_cast<char>(len & 0xff));
    out += header_bytes;
    out += blob_bytes;
    return out;
}

} // namespace

std::string toy_osm_pbf()
{
    const ToyEntities e = toy_entities();

    OSMPBF::HeaderBlock header;
    header.add_required_features("OsmSchema-V0.6");
    header.add_required_features("DenseNodes");

    OSMPBF::PrimitiveBlock block;
    auto* strings = block.mutable_stringtable();
    strings->add_s(""); // index 0 is reserved
    std::map<std::string, int> string_index;
    auto intern = [&](const std::string& s) {
        auto it = string_index.find(s);
        if (it != string_index.end()) {
            return it->second;
        }
        const int idx = strings->s_size();
        strings->add_s(s);
        string_index.emplace(s, idx);
        return idx;
    };

    auto* group = block.add_primitivegroup();
    auto* dense = group->mutable_dense();
    std::int64_t prev_id = 0, prev_lat = 0, prev_lon = 0;
    for (const auto& n : e.nodes) {
        // granularity default 100: raw = degrees * 1e9 / 100
        const std::int64_t lat = static_cast<std::int64_t>(std::llround(n.lat * 1e7));
        const std::int64_t lon = static_cast<std::int64_t>(std::llround(n.lon * 1e7));
        dense->add_id(n.id - prev_id);
        dense->add_lat(lat - prev_lat);
        dense->add_lon(lon - prev_lon);
        prev_id = n.id;
        prev_lat = lat;
        prev_lon = lon;
        for (const auto& [k, v] : n.tags) {
            dense->add_keys_vals(intern(k));
            dense->add_keys_vals(intern(v));
        }
        dense->add_keys_vals(0);
    }
    for (const auto& w : e.ways) {
        auto* way = group->add_ways();
        way->set_id(w.id);
        std::int64_t prev_ref = 0;
        for (auto ref : w.refs) {
            way->add_refs(ref - prev_ref);
            prev_ref = ref;
        }
        for (const auto& [k, v] : w.tags) {
            way->add_keys(static_cast<std::uint32_t>(intern(k)));
            way->add_vals(static_cast<std::uint32_t>(intern(v)));
        }
    }

    return frame_blob("OSMHeader", header) + frame_blob("OSMData", block);
}

std::vector<Building> toy_town(std::size_t n, std::uint64_t seed, const LonLat& center,
                               double spread_m)
{
    geo::Projection proj(center);
    Rng rng(seed);

    constexpr std::size_t kClusters = 8;
    const double sigma = std::max(60.0, spread_m / 5.0);
    std::vector<geo::XY> cluster_centers;
    for (std::size_t c = 0; c < kClusters; ++c) {
        cluster_centers.emplace_back(rng.uniform(-spread_m, spread_m),
                                     rng.uniform(-spread_m, spread_m));
    }

    std::vector<Building> buildings;
    buildings.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = cluster_centers[i % kClusters];
        Building b;
        b.id = static_cast<std::int64_t>(i + 1);
        const geo::XY xy{c.x() + rng.normal(0.0, sigma), c.y() + rng.normal(0.0, sigma)};
        b.coordinates = proj.unproject(xy);
        b.area = rng.uniform(80.0, 300.0);
        switch (i % 4) {
        case 0: b.landuse = Landuse::residential; break;
        case 1: b.landuse = Landuse::none; break;
        case 2: b.landuse = Landuse::commercial; break;
        default: b.landuse = Landuse::industrial; break;
        }
        if (i % 10 == 0) {
            b.n_shops = 1 + static_cast<std::uint32_t>(i % 3);
        }
        if (i % 13 == 0) {
            b.n_offices = 1;
        }
        if (i % 50 == 0) {
            b.n_schools = 1;
        }
        if (i % 97 == 0) {
            b.n_universities = 1;
        }
        buildings.push_back(b);
    }
    return buildings;
}

sim::Model make_model(std::vector<Building> buildings, const geo::AreaGeometry& focus,
                      const AttractionCoeffs& coeffs, double grid_threshold_m)
{
    sim::Model model;
    for (auto& b : buildings) {
        b.in_focus_area = focus.focus_contains(b.coordinates);
    }
    model.buildings = std::move(buildings);
    model.cells = grid::build_grid(model.buildings, focus, grid_threshold_m);
    grid::aggregate_attractions(model.cells, model.buildings, coeffs);
    model.building_cell = grid::building_cell_index(model.cells, model.buildings.size());
    std::vector<LonLat> centroids;
    for (const auto& cell : model.cells) {
        centroids.push_back(cell.centroid);
    }
    model.distances = std::make_unique<dest::BeelineDistance>(std::move(centroids));
    for (const auto& b : model.buildings) {
        if (b.population > 0.0) {
            model.census_present = true;
            break;
        }
    }
    return model;
}

CalibrationBundle all_home_bundle()
{
    CalibrationBundle bundle;
    sched::ChainDistribution dist;
    dist.sample_count = 1000;
    dist.chains = {{{ActivityType::home}, 1.0}};
    bundle.chains.insert(sched::FeatureKey{}, std::move(dist));
    return bundle;
}

} // namespace fixtures
