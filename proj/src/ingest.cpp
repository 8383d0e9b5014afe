#include "mobgen/ingest.hpp"

#include <algorithm>
#include <optional>

#include <boost/geometry/index/rtree.hpp>

#include "mobgen/errors.hpp"
#include "mobgen/util.hpp"

namespace mobgen::ingest {

namespace {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

using geo::Box;
using geo::MultiPolygon;
using geo::Polygon;
using geo::XY;

using RTree = bgi::rtree<std::pair<Box, std::size_t>, bgi::quadratic<16>>;

std::optional<Polygon> way_polygon(const osm::OsmData& data, const osm::Way& way)
{
    if (way.refs.size() < 4 || way.refs.front() != way.refs.back()) {
        return std::nullopt;
    }
    Polygon poly;
    for (auto ref : way.refs) {
        const osm::Node* node = data.find_node(ref);
        if (node == nullptr) {
            return std::nullopt; // clipped extract; drop incomplete rings
        }
        bg::append(poly.outer(), XY{node->pos.lon, node->pos.lat});
    }
    bg::correct(poly);
    if (bg::area(poly) <= 0.0) {
        return std::nullopt;
    }
    return poly;
}

Landuse map_landuse(std::string_view value)
{
    if (value == "residential") {
        return Landuse::residential;
    }
    if (value == "industrial") {
        return Landuse::industrial;
    }
    if (value == "commercial" || value == "retail") {
        return Landuse::commercial;
    }
    return Landuse::none;
}

struct LanduseZone {
    std::int64_t id = 0;
    Landuse landuse = Landuse::none;
    Polygon footprint; // lon/lat
};

struct Poi {
    enum class Kind { shop, office, school, university };
    Kind kind;
    bool is_node = false;
    XY point{};         // for nodes
    Polygon footprint;  // for ways
};

std::optional<Poi::Kind> poi_kind(const osm::Tags& tags)
{
    if (osm::find_tag(tags, "shop") != nullptr) {
        return Poi::Kind::shop;
    }
    if (osm::find_tag(tags, "office") != nullptr) {
        return Poi::Kind::office;
    }
    if (const std::string* amenity = osm::find_tag(tags, "amenity")) {
        if (*amenity == "school") {
            return Poi::Kind::school;
        }
        if (*amenity == "university") {
            return Poi::Kind::university;
        }
    }
    return std::nullopt;
}

} // namespace

geo::AreaGeometry buffer_area(const geo::AreaGeometry& area, double dist_m)
{
    return area.buffered(dist_m);
}

std::vector<Building> extract_buildings(const osm::OsmData& data, const geo::AreaGeometry& area,
                                        const ExtractOptions& options)
{
    struct Candidate {
        const osm::Way* way;
        Polygon footprint;
        LonLat centroid;
        double area_m2;
    };

    const Box area_box = area.bounding_box_lonlat();

    std::vector<Candidate> candidates;
    std::vector<LanduseZone> zones;
    std::vector<Poi> pois;

    for (const auto& way : data.ways) {
        const bool is_building = osm::find_tag(way.tags, "building") != nullptr;
        const std::string* landuse = osm::find_tag(way.tags, "landuse");
        const auto kind = poi_kind(way.tags);
        if (!is_building && landuse == nullptr && !kind) {
            continue;
        }
        auto poly = way_polygon(data, way);
        if (!poly) {
            continue;
        }
        if (is_building) {
            Box box;
            bg::envelope(*poly, box);
            if (bg::intersects(box, area_box)) {
                XY c{0.0, 0.0};
                bg::centroid(*poly, c);
                candidates.push_back(Candidate{&way, *poly, LonLat{c.x(), c.y()}, 0.0});
            }
        }
        if (landuse != nullptr && map_landuse(*landuse) != Landuse::none) {
            zones.push_back(LanduseZone{way.id, map_landuse(*landuse), *poly});
        }
        if (kind) {
            Poi poi;
            poi.kind = *kind;
            poi.is_node = false;
            poi.footprint = std::move(*poly);
            pois.push_back(std::move(poi));
        }
    }
    for (const auto& node : data.nodes) {
        if (auto kind = poi_kind(node.tags)) {
            Poi poi;
            poi.kind = *kind;
            poi.is_node = true;
            poi.point = XY{node.pos.lon, node.pos.lat};
            pois.push_back(std::move(poi));
        }
    }

    // Footprint decides area membership and content; intersection tests run
    // against the buffered geometry, focus tagging against the raw focus.
    std::erase_if(candidates, [&](const Candidate& c) {
        return !area.intersects_lonlat(MultiPolygon{c.footprint});
    });
    if (candidates.empty()) {
        throw EmptyModelError("no buildings intersect the model area");
    }

    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.way->id < b.way->id; });

    const geo::Projection& proj = area.projection();
    for (auto& c : candidates) {
        c.area_m2 = bg::area(geo::project_all(MultiPolygon{c.footprint}, proj));
    }
    std::erase_if(candidates, [](const Candidate& c) { return !(c.area_m2 > 0.0); });
    if (candidates.empty()) {
        throw EmptyModelError("all buildings in the model area have degenerate footprints");
    }

    RTree zone_tree;
    for (std::size_t i = 0; i < zones.size(); ++i) {
        Box box;
        bg::envelope(zones[i].footprint, box);
        zone_tree.insert({box, i});
    }
    RTree poi_tree;
    for (std::size_t i = 0; i < pois.size(); ++i) {
        Box box;
        if (pois[i].is_node) {
            box = Box{pois[i].point, pois[i].point};
        }
        else {
            bg::envelope(pois[i].footprint, box);
        }
        poi_tree.insert({box, i});
    }

    std::vector<Building> buildings(candidates.size());
    util::parallel_for(candidates.size(), options.threads, [&](std::size_t i) {
        const Candidate& c = candidates[i];
        Building b;
        b.id = c.way->id;
        b.coordinates = c.centroid;
        b.area = c.area_m2;
        b.in_focus_area = area.focus_contains(c.centroid);

        Box box;
        bg::envelope(c.footprint, box);

        // Landuse of the intersecting zone; several zones -> the one with the
        // largest overlap, ties to the smallest zone id.
        double best_overlap = -1.0;
        std::int64_t best_id = 0;
        Landuse best = Landuse::none;
        for (auto it = zone_tree.qbegin(bgi::intersects(box)); it != zone_tree.qend(); ++it) {
            const LanduseZone& zone = zones[it->second];
            if (!bg::intersects(c.footprint, zone.footprint)) {
                continue;
            }
            MultiPolygon overlap;
            bg::intersection(c.footprint, zone.footprint, overlap);
            const double w = bg::area(overlap);
            if (w > best_overlap || (w == best_overlap && zone.id < best_id)) {
                best_overlap = w;
                best_id = zone.id;
                best = zone.landuse;
            }
        }
        b.landuse = best;

        for (auto it = poi_tree.qbegin(bgi::intersects(box)); it != poi_tree.qend(); ++it) {
            const Poi& poi = pois[it->second];
            const bool hits = poi.is_node ? bg::covered_by(poi.point, c.footprint)
                                          : bg::intersects(poi.footprint, c.footprint);
            if (!hits) {
                continue;
            }
            switch (poi.kind) {
            case Poi::Kind::shop: ++b.n_shops; break;
            case Poi::Kind::office: ++b.n_offices; break;
            case Poi::Kind::school: ++b.n_schools; break;
            case Poi::Kind::university: ++b.n_universities; break;
            }
        }
        buildings[i] = b;
    });

    return buildings;
}

std::vector<Building> extract_buildings(const std::filesystem::path& osm_file,
                                        const geo::AreaGeometry& area,
                                        const ExtractOptions& options)
{
    return extract_buildings(osm::read_file(osm_file), area, options);
}

std::vector<Building>& apply_census(std::vector<Building>& buildings,
                                    const std::vector<geojson::CensusCell>& cells,
                                    const osm::OsmData& data)
{
    // Rebuild each building's footprint for the intersection tests.
    std::unordered_map<std::int64_t, std::size_t> by_id;
    by_id.reserve(buildings.size());
    for (std::size_t i = 0; i < buildings.size(); ++i) {
        by_id.emplace(buildings[i].id, i);
    }

    std::vector<Polygon> footprints(buildings.size());
    RTree tree;
    for (const auto& way : data.ways) {
        auto it = by_id.find(way.id);
        if (it == by_id.end()) {
            continue;
        }
        auto poly = way_polygon(data, way);
        if (!poly) {
            continue;
        }
        Box box;
        bg::envelope(*poly, box);
        footprints[it->second] = std::move(*poly);
        tree.insert({box, it->second});
    }

    for (const auto& cell : cells) {
        Box cell_box;
        bg::envelope(cell.geometry, cell_box);
        std::vector<std::size_t> hit;
        for (auto it = tree.qbegin(bgi::intersects(cell_box)); it != tree.qend(); ++it) {
            if (bg::intersects(footprints[it->second], cell.geometry)) {
                hit.push_back(it->second);
            }
        }
        if (hit.empty()) {
            continue;
        }
        const double share = cell.population / static_cast<double>(hit.size());
        for (std::size_t idx : hit) {
            buildings[idx].population += share;
        }
    }
    return buildings;
}

std::vector<Building>& apply_census(std::vector<Building>& buildings,
                                    const std::filesystem::path& census_file,
                                    const osm::OsmData& data,
                                    const std::string& population_property)
{
    auto cells = geojson::parse_census(census_file, population_property);
    return apply_census(buildings, cells, data);
}

} // namespace mobgen::ingest
