#include "mobgen/commands.hpp"

#include <iomanip>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "mobgen/bundle.hpp"
#include "mobgen/cache.hpp"
#include "mobgen/calibration.hpp"
#include "mobgen/errors.hpp"
#include "mobgen/simulator.hpp"
#include "mobgen/util.hpp"
#include "mobgen/validation.hpp"

namespace mobgen::cli {

namespace {

unsigned effective_threads(const RunConfig& config)
{
    return config.threads == 0 ? util::default_thread_count() : config.threads;
}

cache::PrepareRequest to_request(const RunConfig& config)
{
    cache::PrepareRequest request;
    request.osm_file = config.osm;
    request.area_file = config.area;
    if (config.census && !config.census->empty()) {
        request.census_file = config.census;
    }
    request.census_property = config.census_property;
    request.buffer_m = config.buffer_m;
    request.grid_threshold_m = config.grid_threshold_m;
    request.beeline = config.dist_metric == "beeline";
    request.threads = effective_threads(config);
    return request;
}

int missing_input(const std::filesystem::path& path)
{
    std::cerr << "error: input file missing: " << path.string() << "\n";
    return kExitMissingInput;
}

bool require_exists(const std::filesystem::path& path)
{
    return !path.empty() && std::filesystem::exists(path);
}

} // namespace

int cmd_prepare(const RunConfig& config)
{
    for (const auto* path : {&config.osm, &config.area}) {
        if (!require_exists(*path)) {
            return missing_input(*path);
        }
    }
    if (config.census && !config.census->empty() && !std::filesystem::exists(*config.census)) {
        return missing_input(*config.census);
    }
    auto prepared = cache::prepare(to_request(config));
    std::cout << "buildings: " << prepared.model.buildings.size()
              << (prepared.buildings_cached ? " (cached)" : "") << "\n"
              << "road graph nodes: " << prepared.graph.node_count()
              << (prepared.graph_cached ? " (cached)" : "") << "\n"
              << "grid cells: " << prepared.model.cells.size()
              << (prepared.grid_cached ? " (cached)" : "") << "\n";
    if (!prepared.matrix_path.empty()) {
        std::cout << "distance matrix: " << prepared.matrix_path.string()
                  << (prepared.matrix_cached ? " (cached)" : "") << "\n";
    }
    return kExitOk;
}

int cmd_simulate(const RunConfig& config)
{
    for (const auto* path : {&config.osm, &config.area}) {
        if (!require_exists(*path)) {
            return missing_input(*path);
        }
    }
    if (!require_exists(config.bundle)) {
        std::cerr << "error: bundle file missing: " << config.bundle.string() << "\n";
        return kExitMissingBundle;
    }
    const CalibrationBundle bundle = CalibrationBundle::load(config.bundle);

    auto prepared = cache::prepare(to_request(config));
    grid::aggregate_attractions(prepared.model.cells, prepared.model.buildings,
                                bundle.attraction);

    pop::SocioDistribution socio;
    sim::SimulationOptions options;
    options.agents = config.agents;
    options.days = config.days;
    options.start_weekday = config.start_weekday;
    options.seed = config.seed;
    options.threads = effective_threads(config);
    if (config.socio && !config.socio->empty()) {
        socio = pop::SocioDistribution::load(*config.socio);
        options.socio = &socio;
    }

    const auto schedules = sim::simulate(prepared.model, bundle, options);
    const std::string json = sim::schedules_to_json(schedules, prepared.model);
    if (config.out.empty()) {
        std::cout << json << "\n";
    }
    else {
        util::write_file(config.out, json);
        util::log_info("wrote " + std::to_string(schedules.size()) + " agent schedules to " +
                       config.out.string());
    }
    return kExitOk;
}

int cmd_calibrate(const RunConfig& config)
{
    if (!require_exists(config.survey)) {
        return missing_input(config.survey);
    }
    if (!require_exists(config.cells)) {
        return missing_input(config.cells);
    }
    calib::Survey survey;
    calib::CellTable cells;
    try {
        survey = calib::Survey::load_csv(config.survey);
        cells = calib::CellTable::load(config.cells);
    }
    catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadSurvey;
    }

    calib::CalibrationOptions options;
    options.seed = config.seed;
    options.threads = effective_threads(config);
    const auto bundle =
        calib::calibrate(survey, cells, calib::beeline_distances(cells), options);
    const auto out = config.out.empty() ? std::filesystem::path("bundle.json") : config.out;
    bundle.save(out);
    util::log_info("wrote calibration bundle to " + out.string());
    return kExitOk;
}

namespace {

struct TableRow {
    std::string activity;
    double resolution_m;
    val::MetricReport report;
};

std::string metrics_table(const std::vector<TableRow>& rows)
{
    std::ostringstream out;
    out << std::left << std::setw(10) << "Activity" << std::setw(12) << "Resolution"
        << std::right << std::setw(9) << "R2" << std::setw(10) << "MAE [%]" << std::setw(16)
        << "Jensen-Shannon" << "\n";
    for (const auto& row : rows) {
        std::ostringstream res;
        if (row.resolution_m >= 1000.0) {
            res << row.resolution_m / 1000.0 << " km";
        }
        else {
            res << row.resolution_m << " m";
        }
        out << std::left << std::setw(10) << row.activity << std::setw(12) << res.str()
            << std::right << std::fixed << std::setprecision(3) << std::setw(9) << row.report.r2
            << std::setw(10) << row.report.mae_percent << std::setw(16) << row.report.js << "\n";
        out.unsetf(std::ios::fixed);
    }
    return out.str();
}

} // namespace

int cmd_validate(const RunConfig& config)
{
    if (!require_exists(config.survey)) {
        return missing_input(config.survey);
    }
    if (!require_exists(config.cells)) {
        return missing_input(config.cells);
    }
    if (!require_exists(config.schedules)) {
        return missing_input(config.schedules);
    }

    calib::Survey survey;
    calib::CellTable cells;
    try {
        survey = calib::Survey::load_csv(config.survey);
        cells = calib::CellTable::load(config.cells);
    }
    catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadSurvey;
    }
    const val::Schedules schedules = sim::load_validation_schedules(config.schedules);
    const std::vector<val::Trip> model_trips = val::extract_trips(schedules);

    std::vector<val::Trip> survey_trips;
    for (const auto& day : survey.days) {
        for (std::size_t i = 0; i + 1 < day.chain.size(); ++i) {
            survey_trips.push_back(val::Trip{cells.cells.at(day.cells[i]).coordinates,
                                             cells.cells.at(day.cells[i + 1]).coordinates,
                                             day.chain[i + 1]});
        }
    }
    if (model_trips.empty() || survey_trips.empty()) {
        std::cerr << "error: no trips to compare\n";
        return kExitBadSurvey;
    }

    // Router: prepared graph when map inputs are given, beeline otherwise.
    std::optional<cache::Prepared> prepared;
    if (!config.osm.empty() && !config.area.empty() && std::filesystem::exists(config.osm) &&
        std::filesystem::exists(config.area) && config.dist_metric != "beeline") {
        prepared = cache::prepare(to_request(config));
    }
    else {
        util::log_warn("validating with beeline distances (no routed graph available)");
    }
    val::TripDistanceFn distance = [&](const LonLat& a, const LonLat& b) {
        if (prepared) {
            return prepared->graph.fastest_route(a, b).distance_m;
        }
        return geo::haversine_m(a, b);
    };
    val::TravelTimeFn travel_time = [&](const LonLat& a, const LonLat& b) {
        if (prepared) {
            return prepared->graph.fastest_route(a, b).travel_time_s;
        }
        return geo::haversine_m(a, b) / (30.0 / 3.6);
    };

    std::vector<TableRow> rows;
    nlohmann::json report;
    for (double resolution : {5000.0, 1000.0, 500.0}) {
        // "All" plus one block per purpose, Appendix-style.
        rows.push_back({"All", resolution, val::zonal_attraction(model_trips, survey_trips, resolution)});
        for (auto purpose : kAllActivities) {
            std::vector<val::Trip> m, s;
            for (const auto& t : model_trips) {
                if (t.purpose == purpose) {
                    m.push_back(t);
                }
            }
            for (const auto& t : survey_trips) {
                if (t.purpose == purpose) {
                    s.push_back(t);
                }
            }
            if (m.empty() || s.empty()) {
                continue;
            }
            rows.push_back({std::string(to_string(purpose)), resolution,
                            val::zonal_attraction(m, s, resolution)});
        }
    }
    nlohmann::json zonal = nlohmann::json::array();
    for (const auto& row : rows) {
        zonal.push_back({{"activity", row.activity},
                         {"resolution_m", row.resolution_m},
                         {"r2", row.report.r2},
                         {"mae_percent", row.report.mae_percent},
                         {"jensen_shannon", row.report.js}});
    }
    report["zonal_attraction"] = std::move(zonal);

    std::vector<TableRow> od_rows;
    for (double resolution : {5000.0, 1000.0}) {
        od_rows.push_back({"All", resolution, val::od_metrics(model_trips, survey_trips, resolution)});
    }
    nlohmann::json od = nlohmann::json::array();
    for (const auto& row : od_rows) {
        od.push_back({{"resolution_m", row.resolution_m},
                      {"r2", row.report.r2},
                      {"mae_percent", row.report.mae_percent},
                      {"jensen_shannon", row.report.js}});
    }
    report["origin_destination"] = std::move(od);

    const auto model_distance = val::daily_distance(schedules, distance);
    report["daily_distance_km"] = {{"q25", model_distance.q25},
                                   {"median", model_distance.median},
                                   {"q75", model_distance.q75},
                                   {"mean", model_distance.mean},
                                   {"ci95", model_distance.ci95},
                                   {"agent_days", model_distance.agent_days}};

    const auto shares = val::temporal_shares(schedules, travel_time, 15.0);
    nlohmann::json temporal = nlohmann::json::array();
    for (std::size_t s = 0; s < shares.size(); ++s) {
        nlohmann::json row;
        row["minute"] = s * 15.0;
        for (std::size_t a = 0; a < kActivityCount; ++a) {
            row[std::string(to_string(static_cast<ActivityType>(a)))] = shares[s][a];
        }
        row["moving"] = shares[s][val::kMovingState];
        temporal.push_back(std::move(row));
    }
    report["temporal_shares"] = std::move(temporal);

    std::string text = "Zonal trip attraction\n" + metrics_table(rows) +
                       "\nOrigin-destination\n" + metrics_table(od_rows);
    std::cout << text;
    if (!config.out.empty()) {
        util::write_file(config.out, report.dump(1));
        util::write_file(config.out.string() + ".txt", text);
        util::log_info("wrote validation report to " + config.out.string());
    }
    return kExitOk;
}

} // namespace mobgen::cli
