#include "mobgen/geojson.hpp"

#include <fstream>

#include <json.hpp>

#include "mobgen/errors.hpp"

namespace mobgen::geojson {

namespace {

using nlohmann::json;
namespace bg = boost::geometry;

geo::Polygon ring_set_to_polygon(const json& coords)
{
    if (!coords.is_array() || coords.empty()) {
        throw ParseError("GeoJSON polygon without rings");
    }
    geo::Polygon poly;
    bool outer = true;
    for (const auto& ring : coords) {
        geo::Ring r;
        for (const auto& pos : ring) {
            if (!pos.is_array() || pos.size() < 2) {
                throw ParseError("GeoJSON position must be [lon, lat]");
            }
            bg::append(r, geo::XY{pos[0].get<double>(), pos[1].get<double>()});
        }
        if (outer) {
            poly.outer() = std::move(r);
            outer = false;
        }
        else {
            poly.inners().push_back(std::move(r));
        }
    }
    bg::correct(poly);
    return poly;
}

void collect_polygons(const json& geometry, std::vector<geo::Polygon>& out)
{
    if (!geometry.is_object() || !geometry.contains("type")) {
        return;
    }
    const std::string type = geometry["type"].get<std::string>();
    if (type == "Polygon") {
        out.push_back(ring_set_to_polygon(geometry.at("coordinates")));
    }
    else if (type == "MultiPolygon") {
        for (const auto& poly : geometry.at("coordinates")) {
            out.push_back(ring_set_to_polygon(poly));
        }
    }
    else if (type == "GeometryCollection" && geometry.contains("geometries")) {
        for (const auto& g : geometry["geometries"]) {
            collect_polygons(g, out);
        }
    }
    // Points, lines etc. are not polygonal; ignored.
}

json parse_json_file(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) {
        throw IoError("cannot open GeoJSON file: " + file.string());
    }
    json doc;
    try {
        in >> doc;
    }
    catch (const json::exception& e) {
        throw ParseError("malformed GeoJSON in " + file.string() + ": " + e.what());
    }
    return doc;
}

/// Yields every geometry object with its owning feature (or null).
template <typename Fn>
void for_each_geometry(const json& doc, Fn&& fn)
{
    if (!doc.is_object() || !doc.contains("type")) {
        throw ParseError("GeoJSON document lacks a type");
    }
    const std::string type = doc["type"].get<std::string>();
    if (type == "FeatureCollection") {
        for (const auto& feature : doc.value("features", json::array())) {
            if (feature.contains("geometry") && !feature["geometry"].is_null()) {
                fn(feature["geometry"], feature);
            }
        }
    }
    else if (type == "Feature") {
        if (doc.contains("geometry") && !doc["geometry"].is_null()) {
            fn(doc["geometry"], doc);
        }
    }
    else {
        fn(doc, json());
    }
}

} // namespace

geo::AreaGeometry parse_focus_area(const std::filesystem::path& file)
{
    json doc = parse_json_file(file);
    std::vector<geo::Polygon> polygons;
    for_each_geometry(doc, [&](const json& geometry, const json&) { collect_polygons(geometry, polygons); });
    if (polygons.empty()) {
        throw EmptyModelError("no polygonal geometry in " + file.string());
    }
    return geo::AreaGeometry(geo::union_all(polygons), geo::AreaGeometry::Role::focus);
}

std::vector<CensusCell> parse_census(const std::filesystem::path& file,
                                     const std::string& population_property)
{
    json doc = parse_json_file(file);
    std::vector<CensusCell> cells;
    for_each_geometry(doc, [&](const json& geometry, const json& feature) {
        std::vector<geo::Polygon> polygons;
        collect_polygons(geometry, polygons);
        if (polygons.empty()) {
            return;
        }
        if (!feature.is_object() || !feature.contains("properties") ||
            !feature["properties"].contains(population_property)) {
            throw SchemaError("census feature lacks numeric property '" + population_property +
                              "' in " + file.string());
        }
        const auto& prop = feature["properties"][population_property];
        if (!prop.is_number()) {
            throw SchemaError("census property '" + population_property + "' is not numeric");
        }
        CensusCell cell;
        for (auto& p : polygons) {
            cell.geometry.push_back(std::move(p));
        }
        cell.population = prop.get<double>();
        if (cell.population < 0.0) {
            throw SchemaError("census population must be non-negative");
        }
        cells.push_back(std::move(cell));
    });
    return cells;
}

} // namespace mobgen::geojson
