#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mobgen/errors.hpp"

namespace mobgen {

/// WGS84 coordinate, degrees.
struct LonLat {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(const LonLat&, const LonLat&) = default;
};

/// Activity categories. Doubles as the trip purpose (the activity conducted
/// at the destination).
enum class ActivityType : std::uint8_t { home, work, school, shopping, other };

inline constexpr std::array<ActivityType, 5> kAllActivities = {
    ActivityType::home, ActivityType::work, ActivityType::school,
    ActivityType::shopping, ActivityType::other};

inline constexpr std::size_t kActivityCount = kAllActivities.size();

using Purpose = ActivityType;

enum class Landuse : std::uint8_t { residential, industrial, commercial, none };

enum class AgeGroup : std::uint8_t { a0_40, a40_60, a60_100, undefined };
enum class HomogenousGroup : std::uint8_t { working, non_working, student, undefined };
enum class MobilityGroup : std::uint8_t { car_full, car_mixed, car_none, undefined };

/// Day of week; `undefined` marks the unconditioned case.
enum class Weekday : std::uint8_t { mon, tue, wed, thu, fri, sat, sun, undefined };

/// Advance a weekday by one simulated day; `undefined` stays undefined.
inline Weekday next_weekday(Weekday w)
{
    if (w == Weekday::undefined) {
        return w;
    }
    return static_cast<Weekday>((static_cast<int>(w) + 1) % 7);
}

struct SocioFeatures {
    AgeGroup age = AgeGroup::undefined;
    HomogenousGroup homogenous_group = HomogenousGroup::undefined;
    MobilityGroup mobility_group = MobilityGroup::undefined;

    friend bool operator==(const SocioFeatures&, const SocioFeatures&) = default;
};

// --- string conversions (bundle files, survey CSV, schedule output) ---

std::string_view to_string(ActivityType a);
std::string_view to_upper_string(ActivityType a);
std::string_view to_string(Landuse l);
std::string_view to_string(AgeGroup a);
std::string_view to_string(HomogenousGroup g);
std::string_view to_string(MobilityGroup m);
std::string_view to_string(Weekday w);

ActivityType activity_from_string(std::string_view s);
Landuse landuse_from_string(std::string_view s);
AgeGroup age_from_string(std::string_view s);
HomogenousGroup homogenous_from_string(std::string_view s);
MobilityGroup mobility_from_string(std::string_view s);
Weekday weekday_from_string(std::string_view s);

/// Short textual form of an activity chain, e.g. "home>work>home".
std::string chain_to_string(const std::vector<ActivityType>& chain);
std::vector<ActivityType> chain_from_string(std::string_view s);

} // namespace mobgen
