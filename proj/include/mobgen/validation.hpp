#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "mobgen/types.hpp"

namespace mobgen::val {

/// One georeferenced trip: where it started, where it ended, and the
/// activity conducted at the destination.
struct Trip {
    LonLat origin;
    LonLat destination;
    Purpose purpose = Purpose::other;
};

/// One activity of a serialized schedule; the last activity of a day has no
/// dwell time (it runs until midnight).
struct ScheduledActivity {
    ActivityType type = ActivityType::home;
    std::optional<double> dwell_minutes;
    LonLat location;
};

/// [agent][day][activity]
using Schedules = std::vector<std::vector<std::vector<ScheduledActivity>>>;

/// meters between two points, routed or beeline
using TripDistanceFn = std::function<double(const LonLat&, const LonLat&)>;
/// seconds of travel between two points
using TravelTimeFn = std::function<double(const LonLat&, const LonLat&)>;

struct MetricReport {
    double r2 = 0.0;          // coefficient of determination; negative possible
    double mae_percent = 0.0; // mean absolute share error, percentage points
    double js = 0.0;          // Jensen-Shannon divergence, natural log
};

/// Jensen-Shannon divergence between two distributions on the same support
/// (zero-padded); natural logarithm, so the range is [0, ln 2].
double jensen_shannon(std::span<const double> p, std::span<const double> q);

/// Share-of-trips-per-zone comparison on a regular lattice of the given
/// resolution anchored at the model trips' bounding box.
MetricReport zonal_attraction(const std::vector<Trip>& model, const std::vector<Trip>& survey,
                              double resolution_m);

/// Same comparison over origin-destination zone pairs.
MetricReport od_metrics(const std::vector<Trip>& model, const std::vector<Trip>& survey,
                        double resolution_m);

struct DistanceStats {
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
    double mean = 0.0;
    double ci95 = 0.0; // half width of the 95% interval on the mean
    std::size_t agent_days = 0;
};

/// Sum of routed all-or-nothing trip distances per agent-day, in km.
DistanceStats daily_distance(const Schedules& schedules, const TripDistanceFn& distance);

/// Per-agent-day kilometer totals (the raw data behind daily_distance).
std::vector<double> daily_distance_samples(const Schedules& schedules,
                                           const TripDistanceFn& distance);

/// Six states: the five activities plus "moving".
inline constexpr std::size_t kTemporalStates = kActivityCount + 1;
inline constexpr std::size_t kMovingState = kActivityCount;

/// Share of agents in each state at every `step_minutes` tick across the
/// whole simulated horizon. Shares sum to one at every tick.
std::vector<std::array<double, kTemporalStates>> temporal_shares(const Schedules& schedules,
                                                                 const TravelTimeFn& travel_time,
                                                                 double step_minutes);

/// Trips contained in a schedule set (consecutive activity pairs).
std::vector<Trip> extract_trips(const Schedules& schedules);

} // namespace mobgen::val
