#include "mobgen/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "mobgen/errors.hpp"
#include "mobgen/util.hpp"

namespace mobgen::sched {

std::uint32_t FeatureKey::packed() const
{
    return (static_cast<std::uint32_t>(features.age) << 12) |
           (static_cast<std::uint32_t>(features.homogenous_group) << 8) |
           (static_cast<std::uint32_t>(features.mobility_group) << 4) |
           static_cast<std::uint32_t>(weekday);
}

std::vector<FeatureKey> fallback_cascade(const SocioFeatures& features, Weekday weekday)
{
    std::vector<FeatureKey> keys;
    FeatureKey key{features, weekday};
    keys.push_back(key);
    auto push_if_new = [&](const FeatureKey& k) {
        if (k != keys.back()) {
            keys.push_back(k);
        }
    };
    key.features.age = AgeGroup::undefined;
    push_if_new(key);
    key.features.mobility_group = MobilityGroup::undefined;
    push_if_new(key);
    key.features.homogenous_group = HomogenousGroup::undefined;
    push_if_new(key);
    key.weekday = Weekday::undefined;
    push_if_new(key);
    return keys;
}

void ChainTable::insert(const FeatureKey& key, ChainDistribution dist)
{
    entries_[key.packed()] = {key, std::move(dist)};
}

const ChainDistribution* ChainTable::find(const FeatureKey& key) const
{
    auto it = entries_.find(key.packed());
    return it == entries_.end() ? nullptr : &it->second.second;
}

const ChainDistribution& ChainTable::select(const SocioFeatures& features, Weekday weekday) const
{
    for (const FeatureKey& key : fallback_cascade(features, weekday)) {
        const ChainDistribution* dist = find(key);
        if (dist != nullptr && dist->sample_count >= kMinSampleCount && !dist->empty()) {
            return *dist;
        }
    }
    throw ModelLoadError("chain table lacks the fully-undefined distribution");
}

RecalibrationResult recalibrate_chain_lengths(const ChainDistribution& dist,
                                              const std::map<std::size_t, double>& length_marginals)
{
    RecalibrationResult result;
    result.distribution.sample_count = dist.sample_count;
    if (dist.chains.empty()) {
        return result;
    }

    std::map<std::size_t, double> group_total;
    for (const auto& [chain, p] : dist.chains) {
        group_total[chain.size()] += p;
    }

    // Marginal mass whose length group lost every chain is redistributed
    // proportionally over the surviving groups.
    double lost = 0.0;
    double kept = 0.0;
    for (const auto& [len, p] : length_marginals) {
        if (group_total.count(len) && group_total[len] > 0.0) {
            kept += p;
        }
        else {
            lost += p;
        }
    }
    if (lost > 0.0) {
        result.reallocated = true;
        util::log_warn("chain-length recalibration: no surviving chain for marginal mass " +
                       std::to_string(lost) + "; redistributing");
    }
    if (!(kept > 0.0)) {
        result.distribution = dist;
        return result;
    }
    const double boost = 1.0 / kept;

    double total = 0.0;
    for (const auto& [chain, p] : dist.chains) {
        const std::size_t len = chain.size();
        auto it = length_marginals.find(len);
        const double marginal = it == length_marginals.end() ? 0.0 : it->second;
        const double scaled = group_total[len] > 0.0 ? p / group_total[len] * marginal * boost : 0.0;
        if (scaled > 0.0) {
            result.distribution.chains.emplace_back(chain, scaled);
            total += scaled;
        }
    }
    for (auto& [chain, p] : result.distribution.chains) {
        p /= total;
    }
    return result;
}

std::optional<Chain> sample_chain(const ChainDistribution& dist, ActivityType prev_last, Rng& rng)
{
    if (dist.chains.empty()) {
        return std::nullopt;
    }
    std::vector<double> weights;
    weights.reserve(dist.chains.size());
    double total = 0.0;
    for (const auto& [chain, p] : dist.chains) {
        const double w = (!chain.empty() && chain.front() == prev_last) ? p : 0.0;
        weights.push_back(w);
        total += w;
    }
    if (!(total > 0.0)) {
        return std::nullopt;
    }
    return dist.chains[rng.discrete(weights)].first;
}

Chain sample_chain_with_fallback(const ChainTable& table, const SocioFeatures& features,
                                 Weekday weekday, ActivityType prev_last, Rng& rng)
{
    for (const FeatureKey& key : fallback_cascade(features, weekday)) {
        const ChainDistribution* dist = table.find(key);
        if (dist == nullptr || dist->sample_count < kMinSampleCount || dist->empty()) {
            continue;
        }
        if (auto chain = sample_chain(*dist, prev_last, rng)) {
            return *chain;
        }
    }
    util::log_warn("no chain continues activity '" + std::string(to_string(prev_last)) +
                   "'; emitting a single-activity day");
    return Chain{prev_last};
}

void MixtureTable::insert(const FeatureKey& key, const Chain& chain, DwellMixture mixture)
{
    entries_[{key.packed(), chain_to_string(chain)}] = {key, std::move(mixture)};
}

const DwellMixture* MixtureTable::find(const FeatureKey& key, const Chain& chain) const
{
    auto it = entries_.find({key.packed(), chain_to_string(chain)});
    return it == entries_.end() ? nullptr : &it->second.second;
}

const DwellMixture* MixtureTable::find_with_fallback(const SocioFeatures& features, Weekday weekday,
                                                     const Chain& chain) const
{
    for (const FeatureKey& key : fallback_cascade(features, weekday)) {
        if (const DwellMixture* m = find(key, chain)) {
            return m;
        }
    }
    return nullptr;
}

std::vector<double> sample_dwell_times(const DwellMixture& mixture, std::size_t chain_length,
                                       Rng& rng)
{
    if (chain_length == 0) {
        throw ArgumentError("empty chain");
    }
    const std::size_t dim = chain_length - 1;
    if (dim == 0) {
        return {};
    }
    if (mixture.mixture.dimension() != dim) {
        throw ModelLoadError("dwell mixture dimension " +
                             std::to_string(mixture.mixture.dimension()) +
                             " does not match chain length " + std::to_string(chain_length));
    }

    Eigen::VectorXd hours;
    bool valid = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
        hours = mixture.mixture.sample(rng);
        if ((hours.array() >= 0.0).all()) {
            valid = true;
            break;
        }
    }
    if (!valid) {
        hours = hours.cwiseMax(0.0);
    }

    std::vector<double> minutes(dim);
    double used = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        double m = hours(static_cast<Eigen::Index>(i)) * 60.0;
        if (used + m > kMinutesPerDay) {
            m = std::max(0.0, kMinutesPerDay - used);
        }
        minutes[i] = m;
        used += m;
    }
    return minutes;
}

DayPlan generate_day(const SocioFeatures& features, Weekday weekday, ActivityType prev_last,
                     std::uint32_t prev_building, const ScheduleModel& model,
                     const Locator& locator, Rng& rng)
{
    const Chain chain =
        sample_chain_with_fallback(*model.chains, features, weekday, prev_last, rng);

    std::vector<double> dwell;
    if (chain.size() > 1) {
        const DwellMixture* mixture =
            model.mixtures->find_with_fallback(features, weekday, chain);
        if (mixture == nullptr) {
            throw ModelLoadError("no dwell mixture for chain '" + chain_to_string(chain) + "'");
        }
        dwell = sample_dwell_times(*mixture, chain.size(), rng);
    }

    DayPlan plan;
    plan.weekday = weekday;
    plan.activities.reserve(chain.size());
    std::uint32_t current = prev_building;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        DayActivity activity;
        activity.type = chain[i];
        if (i + 1 < chain.size()) {
            activity.dwell_minutes = dwell[i];
        }
        // The first activity continues the previous day in place.
        activity.building = (i == 0) ? prev_building : locator(chain[i], current, rng);
        current = activity.building;
        plan.activities.push_back(activity);
    }
    return plan;
}

} // namespace mobgen::sched
