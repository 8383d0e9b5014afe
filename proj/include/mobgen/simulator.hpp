#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "mobgen/bundle.hpp"
#include "mobgen/population.hpp"
#include "mobgen/schedule.hpp"
#include "mobgen/validation.hpp"

namespace mobgen::sim {

/// Prepared world model: buildings, grid, distances.
struct Model {
    std::vector<Building> buildings;
    std::vector<grid::GridCell> cells;
    std::vector<std::uint32_t> building_cell;
    std::unique_ptr<dest::DistanceProvider> distances;
    bool census_present = false;
};

struct AgentSchedule {
    pop::Agent agent;
    std::vector<sched::DayPlan> days;
};

struct SimulationOptions {
    std::size_t agents = 1;
    int days = 1;
    Weekday start_weekday = Weekday::undefined;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    const pop::SocioDistribution* socio = nullptr;
};

/// Full forward run: population, then day-by-day schedules per agent.
/// Deterministic for a fixed seed, independent of the worker count.
std::vector<AgentSchedule> simulate(const Model& model, const CalibrationBundle& bundle,
                                    const SimulationOptions& options);

/// Fig-3-shaped JSON: a top-level array of agents, each with its features
/// and per-day activity lists (type, stayTime, lat, lon, inFocusArea).
std::string schedules_to_json(const std::vector<AgentSchedule>& schedules, const Model& model);

/// Schedules in the neutral form the validation metrics consume.
val::Schedules to_validation_schedules(const std::vector<AgentSchedule>& schedules,
                                       const Model& model);

/// Parse a schedules file written by schedules_to_json.
val::Schedules load_validation_schedules(const std::filesystem::path& path);

} // namespace mobgen::sim
