#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "mobgen/gmm.hpp"
#include "mobgen/rng.hpp"
#include "mobgen/types.hpp"

namespace mobgen::sched {

/// Minimum underlying sample size for a usable empirical distribution.
inline constexpr std::size_t kMinSampleCount = 30;

using Chain = std::vector<ActivityType>;

/// Lookup key for chain and dwell tables.
struct FeatureKey {
    SocioFeatures features;
    Weekday weekday = Weekday::undefined;

    friend bool operator==(const FeatureKey&, const FeatureKey&) = default;
    std::uint32_t packed() const;
    friend bool operator<(const FeatureKey& a, const FeatureKey& b)
    {
        return a.packed() < b.packed();
    }
};

/// Relaxation sequence: as given, then age, mobility group, homogenous
/// group and finally the weekday set to undefined, cumulatively.
std::vector<FeatureKey> fallback_cascade(const SocioFeatures& features, Weekday weekday);

struct ChainDistribution {
    std::vector<std::pair<Chain, double>> chains; // probabilities sum to 1
    std::size_t sample_count = 0;

    bool empty() const { return chains.empty(); }
};

class ChainTable {
public:
    void insert(const FeatureKey& key, ChainDistribution dist);
    const ChainDistribution* find(const FeatureKey& key) const;

    /// Walk the fallback cascade until a distribution with an adequate
    /// sample count turns up. The fully-undefined distribution must exist.
    const ChainDistribution& select(const SocioFeatures& features, Weekday weekday) const;

    const std::map<std::uint32_t, std::pair<FeatureKey, ChainDistribution>>& entries() const
    {
        return entries_;
    }
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::uint32_t, std::pair<FeatureKey, ChainDistribution>> entries_;
};

struct RecalibrationResult {
    ChainDistribution distribution;
    bool reallocated = false; // some marginal mass had no surviving chain
};

/// Rescale chain probabilities so each length group carries the probability
/// recorded in `length_marginals` (map chain length -> probability), keeping
/// within-group ratios. Marginal mass on lengths without survivors is spread
/// proportionally over the remaining groups.
RecalibrationResult recalibrate_chain_lengths(const ChainDistribution& dist,
                                              const std::map<std::size_t, double>& length_marginals);

/// One draw restricted to chains whose first activity continues `prev_last`;
/// nullopt when no chain qualifies.
std::optional<Chain> sample_chain(const ChainDistribution& dist, ActivityType prev_last, Rng& rng);

/// Continuity-aware draw with the full fallback cascade; as a last resort
/// the agent stays at `prev_last` all day.
Chain sample_chain_with_fallback(const ChainTable& table, const SocioFeatures& features,
                                 Weekday weekday, ActivityType prev_last, Rng& rng);

/// Dwell time model of one (features, weekday, chain) combination. The
/// dimension is one less than the chain length; the final activity runs
/// until midnight.
struct DwellMixture {
    gmm::Mixture mixture;
};

class MixtureTable {
public:
    void insert(const FeatureKey& key, const Chain& chain, DwellMixture mixture);
    const DwellMixture* find(const FeatureKey& key, const Chain& chain) const;

    /// Same relaxation order as the chain lookup.
    const DwellMixture* find_with_fallback(const SocioFeatures& features, Weekday weekday,
                                           const Chain& chain) const;

    const std::map<std::pair<std::uint32_t, std::string>, std::pair<FeatureKey, DwellMixture>>&
    entries() const
    {
        return entries_;
    }

private:
    std::map<std::pair<std::uint32_t, std::string>, std::pair<FeatureKey, DwellMixture>> entries_;
};

inline constexpr double kMinutesPerDay = 1440.0;

/// Joint dwell draw in minutes for every activity but the last. Negative
/// coordinates are rejected and redrawn (bounded), then clamped; the running
/// total is truncated at midnight.
std::vector<double> sample_dwell_times(const DwellMixture& mixture, std::size_t chain_length,
                                       Rng& rng);

struct DayActivity {
    ActivityType type = ActivityType::home;
    std::optional<double> dwell_minutes; // nullopt: open ended (until midnight)
    std::uint32_t building = 0;
};

struct DayPlan {
    Weekday weekday = Weekday::undefined;
    std::vector<DayActivity> activities;

    ActivityType last_type() const { return activities.back().type; }
    std::uint32_t last_building() const { return activities.back().building; }
};

/// Where the agent performs an activity; previous location given for
/// current-position-based choices.
using Locator = std::function<std::uint32_t(ActivityType type, std::uint32_t current_building, Rng& rng)>;

struct ScheduleModel {
    const ChainTable* chains = nullptr;
    const MixtureTable* mixtures = nullptr;
};

/// One simulated day: chain, dwell times, locations. The first activity
/// continues the previous day at the previous location.
DayPlan generate_day(const SocioFeatures& features, Weekday weekday, ActivityType prev_last,
                     std::uint32_t prev_building, const ScheduleModel& model,
                     const Locator& locator, Rng& rng);

} // namespace mobgen::sched
