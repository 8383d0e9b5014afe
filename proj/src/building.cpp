#include "mobgen/building.hpp"

#include <fstream>

#include <json.hpp>

#include "mobgen/errors.hpp"

namespace mobgen {

FeatureVector Building::features() const
{
    FeatureVector x{};
    switch (landuse) {
    case Landuse::residential:
        x[kAreaResidential] = area;
        x[kUseResidential] = 1.0;
        break;
    case Landuse::industrial:
        x[kAreaIndustrial] = area;
        x[kUseIndustrial] = 1.0;
        break;
    case Landuse::commercial:
        x[kAreaCommercial] = area;
        x[kUseCommercial] = 1.0;
        break;
    case Landuse::none:
        x[kAreaOther] = area;
        x[kUseOther] = 1.0;
        break;
    }
    x[kPoiOffices] = n_offices;
    x[kPoiShops] = n_shops;
    x[kPoiSchools] = n_schools;
    x[kPoiUniversities] = n_universities;
    return x;
}

void save_buildings_ndjson(const std::vector<Building>& buildings,
                           const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write building table: " + path.string());
    }
    for (const auto& b : buildings) {
        nlohmann::ordered_json row;
        row["id"] = b.id;
        row["coordinates"] = {b.coordinates.lon, b.coordinates.lat};
        row["area"] = b.area;
        row["population"] = b.population;
        row["landuse"] = to_string(b.landuse);
        row["number of shops"] = b.n_shops;
        row["number of offices"] = b.n_offices;
        row["number of schools"] = b.n_schools;
        row["number of universities"] = b.n_universities;
        row["In focus area?"] = b.in_focus_area;
        out << row.dump() << "\n";
    }
}

std::vector<Building> load_buildings_ndjson(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open building table: " + path.string());
    }
    std::vector<Building> buildings;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        }
        catch (const nlohmann::json::exception& e) {
            throw ParseError("bad NDJSON at " + path.string() + ":" + std::to_string(line_no) +
                             ": " + e.what());
        }
        Building b;
        b.id = row.at("id").get<std::int64_t>();
        b.coordinates = LonLat{row.at("coordinates").at(0).get<double>(),
                               row.at("coordinates").at(1).get<double>()};
        b.area = row.at("area").get<double>();
        b.population = row.at("population").get<double>();
        b.landuse = landuse_from_string(row.at("landuse").get<std::string>());
        b.n_shops = row.at("number of shops").get<std::uint32_t>();
        b.n_offices = row.at("number of offices").get<std::uint32_t>();
        b.n_schools = row.at("number of schools").get<std::uint32_t>();
        b.n_universities = row.at("number of universities").get<std::uint32_t>();
        b.in_focus_area = row.at("In focus area?").get<bool>();
        buildings.push_back(b);
    }
    return buildings;
}

} // namespace mobgen
