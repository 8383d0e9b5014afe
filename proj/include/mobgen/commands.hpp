#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mobgen/grid.hpp"
#include "mobgen/routing.hpp"
#include "mobgen/types.hpp"

namespace mobgen::cli {

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitMissingInput = 2;
inline constexpr int kExitMissingBundle = 3;
inline constexpr int kExitBadSurvey = 4;

struct RunConfig {
    std::filesystem::path osm;
    std::filesystem::path area;
    std::optional<std::filesystem::path> census;
    std::string census_property = "population";
    double buffer_m = 0.0;
    std::size_t agents = 1;
    int days = 1;
    Weekday start_weekday = Weekday::undefined;
    std::uint64_t seed = 1;
    double grid_threshold_m = grid::kDefaultGridThresholdM;
    std::string dist_metric = "routed"; // routed | beeline
    std::filesystem::path bundle;
    std::filesystem::path survey;
    std::filesystem::path cells;
    std::filesystem::path schedules;
    std::optional<std::filesystem::path> socio;
    std::filesystem::path out;
    unsigned threads = 0; // 0: hardware default
};

int cmd_prepare(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_calibrate(const RunConfig& config);
int cmd_validate(const RunConfig& config);

} // namespace mobgen::cli
