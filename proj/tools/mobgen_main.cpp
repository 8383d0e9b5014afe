#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mobgen/commands.hpp"
#include "mobgen/errors.hpp"

namespace {

using mobgen::cli::RunConfig;

void add_common_flags(CLI::App* cmd, RunConfig& config)
{
    cmd->add_option("--seed", config.seed, "random seed");
    cmd->add_option("--threads", config.threads, "worker threads (0: all cores)");
    cmd->add_option("--out", config.out, "output path");
}

void add_map_flags(CLI::App* cmd, RunConfig& config, std::string& census, std::string& weekday)
{
    cmd->add_option("--osm", config.osm, "OSM extract (.osm or .osm.pbf)")->required();
    cmd->add_option("--area", config.area, "focus area GeoJSON")->required();
    cmd->add_option("--census", census, "census GeoJSON (optional)");
    cmd->add_option("--census-property", config.census_property,
                    "census population property name");
    cmd->add_option("--buffer", config.buffer_m, "buffer distance in meters");
    cmd->add_option("--grid-res", config.grid_threshold_m, "grid resolution threshold in meters");
    cmd->add_option("--dist-metric", config.dist_metric, "routed | beeline")
        ->check(CLI::IsMember({"routed", "beeline"}));
    cmd->add_option("--weekday", weekday, "start weekday (mon..sun or undefined)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mobility demand generator"};
    app.require_subcommand(1);

    RunConfig config;
    std::string census, weekday = "undefined", socio;

    auto* prepare = app.add_subcommand("prepare", "parse inputs and cache model artifacts");
    add_map_flags(prepare, config, census, weekday);
    add_common_flags(prepare, config);

    auto* simulate = app.add_subcommand("simulate", "generate agent activity schedules");
    add_map_flags(simulate, config, census, weekday);
    add_common_flags(simulate, config);
    simulate->add_option("--bundle", config.bundle, "calibration bundle JSON")->required();
    simulate->add_option("--agents", config.agents, "number of agents");
    simulate->add_option("--days", config.days, "number of days");
    simulate->add_option("--socio", socio, "socio-demographic distribution JSON");

    auto* calibrate = app.add_subcommand("calibrate", "fit a bundle from a trip-diary survey");
    calibrate->add_option("--survey", config.survey, "survey CSV")->required();
    calibrate->add_option("--cells", config.cells, "calibration cell table JSON")->required();
    add_common_flags(calibrate, config);

    auto* validate = app.add_subcommand("validate", "compare schedules against a survey");
    validate->add_option("--survey", config.survey, "survey CSV")->required();
    validate->add_option("--cells", config.cells, "calibration cell table JSON")->required();
    validate->add_option("--schedules", config.schedules, "schedules JSON from simulate")
        ->required();
    validate->add_option("--osm", config.osm, "OSM extract for routed distances");
    validate->add_option("--area", config.area, "focus area GeoJSON");
    validate->add_option("--dist-metric", config.dist_metric, "routed | beeline")
        ->check(CLI::IsMember({"routed", "beeline"}));
    add_common_flags(validate, config);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!census.empty()) {
            config.census = census;
        }
        if (!socio.empty()) {
            config.socio = socio;
        }
        config.start_weekday = mobgen::weekday_from_string(weekday);

        if (prepare->parsed()) {
            return mobgen::cli::cmd_prepare(config);
        }
        if (simulate->parsed()) {
            return mobgen::cli::cmd_simulate(config);
        }
        if (calibrate->parsed()) {
            return mobgen::cli::cmd_calibrate(config);
        }
        if (validate->parsed()) {
            return mobgen::cli::cmd_validate(config);
        }
    }
    catch (const mobgen::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return mobgen::cli::kExitInternal;
    }
    catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return mobgen::cli::kExitInternal;
    }
    return mobgen::cli::kExitInternal;
}
