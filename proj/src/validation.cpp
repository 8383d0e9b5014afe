#include "mobgen/validation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mobgen/errors.hpp"
#include "mobgen/geo.hpp"

namespace mobgen::val {

double jensen_shannon(std::span<const double> p, std::span<const double> q)
{
    if (p.size() != q.size()) {
        throw ArgumentError("distributions must share a support");
    }
    double js = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) {
            js += 0.5 * p[i] * std::log(p[i] / m);
        }
        if (q[i] > 0.0) {
            js += 0.5 * q[i] * std::log(q[i] / m);
        }
    }
    return std::max(0.0, js);
}

namespace {

struct ZoneIndexer {
    geo::Projection projection;
    double resolution_m;
    double min_x = 0.0;
    double min_y = 0.0;

    std::int64_t zone_of(const LonLat& p) const
    {
        const geo::XY xy = projection.project(p);
        const std::int64_t col = static_cast<std::int64_t>(std::floor((xy.x() - min_x) / resolution_m));
        const std::int64_t row = static_cast<std::int64_t>(std::floor((xy.y() - min_y) / resolution_m));
        return (row << 24) ^ (col & 0xffffff);
    }
};

/// Validation lattice anchored at the model trips' bounding box.
ZoneIndexer make_indexer(const std::vector<Trip>& model, double resolution_m)
{
    double min_lon = model.front().destination.lon, max_lon = min_lon;
    double min_lat = model.front().destination.lat, max_lat = min_lat;
    for (const auto& t : model) {
        for (const LonLat* p : {&t.origin, &t.destination}) {
            min_lon = std::min(min_lon, p->lon);
            max_lon = std::max(max_lon, p->lon);
            min_lat = std::min(min_lat, p->lat);
            max_lat = std::max(max_lat, p->lat);
        }
    }
    ZoneIndexer idx{geo::Projection(LonLat{(min_lon + max_lon) / 2.0, (min_lat + max_lat) / 2.0}),
                    resolution_m};
    const geo::XY corner = idx.projection.project(LonLat{min_lon, min_lat});
    // Pad so bounding-box points stay strictly inside the lattice.
    idx.min_x = corner.x() - 0.5 * resolution_m;
    idx.min_y = corner.y() - 0.5 * resolution_m;
    return idx;
}

MetricReport share_metrics(const std::map<std::int64_t, double>& model_counts, double model_total,
                           const std::map<std::int64_t, double>& survey_counts, double survey_total)
{
    // Union support with zero padding.
    std::vector<double> model_shares, survey_shares;
    for (const auto& [zone, count] : model_counts) {
        model_shares.push_back(count / model_total);
        auto it = survey_counts.find(zone);
        survey_shares.push_back(it == survey_counts.end() ? 0.0 : it->second / survey_total);
    }
    for (const auto& [zone, count] : survey_counts) {
        if (!model_counts.count(zone)) {
            model_shares.push_back(0.0);
            survey_shares.push_back(count / survey_total);
        }
    }

    MetricReport report;
    report.js = jensen_shannon(model_shares, survey_shares);

    const double n = static_cast<double>(model_shares.size());
    double survey_mean = 0.0;
    for (double s : survey_shares) {
        survey_mean += s;
    }
    survey_mean /= n;
    double ss_res = 0.0, ss_tot = 0.0, mae = 0.0;
    for (std::size_t i = 0; i < model_shares.size(); ++i) {
        const double err = survey_shares[i] - model_shares[i];
        ss_res += err * err;
        const double dev = survey_shares[i] - survey_mean;
        ss_tot += dev * dev;
        mae += std::abs(err);
    }
    report.mae_percent = mae / n * 100.0;
    report.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
    return report;
}

} // namespace

MetricReport zonal_attraction(const std::vector<Trip>& model, const std::vector<Trip>& survey,
                              double resolution_m)
{
    if (model.empty() || survey.empty()) {
        throw ArgumentError("zonal attraction needs non-empty trip sets");
    }
    const ZoneIndexer idx = make_indexer(model, resolution_m);
    std::map<std::int64_t, double> model_counts, survey_counts;
    for (const auto& t : model) {
        model_counts[idx.zone_of(t.destination)] += 1.0;
    }
    for (const auto& t : survey) {
        survey_counts[idx.zone_of(t.destination)] += 1.0;
    }
    return share_metrics(model_counts, static_cast<double>(model.size()), survey_counts,
                         static_cast<double>(survey.size()));
}

MetricReport od_metrics(const std::vector<Trip>& model, const std::vector<Trip>& survey,
                        double resolution_m)
{
    if (model.empty() || survey.empty()) {
        throw ArgumentError("OD metrics need non-empty trip sets");
    }
    const ZoneIndexer idx = make_indexer(model, resolution_m);
    std::map<std::int64_t, double> model_counts, survey_counts;
    auto od_key = [&](const Trip& t) {
        const std::int64_t o = idx.zone_of(t.origin);
        const std::int64_t d = idx.zone_of(t.destination);
        return (o * 0x9e3779b1LL) ^ d;
    };
    for (const auto& t : model) {
        model_counts[od_key(t)] += 1.0;
    }
    for (const auto& t : survey) {
        survey_counts[od_key(t)] += 1.0;
    }
    return share_metrics(model_counts, static_cast<double>(model.size()), survey_counts,
                         static_cast<double>(survey.size()));
}

std::vector<double> daily_distance_samples(const Schedules& schedules,
                                           const TripDistanceFn& distance)
{
    std::vector<double> km;
    for (const auto& agent : schedules) {
        for (const auto& day : agent) {
            double total_m = 0.0;
            for (std::size_t i = 0; i + 1 < day.size(); ++i) {
                if (day[i].location == day[i + 1].location) {
                    continue;
                }
                total_m += distance(day[i].location, day[i + 1].location);
            }
            km.push_back(total_m / 1000.0);
        }
    }
    return km;
}

namespace {

double quantile(const std::vector<double>& sorted, double q)
{
    if (sorted.empty()) {
        return 0.0;
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

} // namespace

DistanceStats daily_distance(const Schedules& schedules, const TripDistanceFn& distance)
{
    std::vector<double> km = daily_distance_samples(schedules, distance);
    DistanceStats stats;
    stats.agent_days = km.size();
    if (km.empty()) {
        return stats;
    }
    double sum = 0.0;
    for (double v : km) {
        sum += v;
    }
    stats.mean = sum / static_cast<double>(km.size());
    double ss = 0.0;
    for (double v : km) {
        ss += (v - stats.mean) * (v - stats.mean);
    }
    const double n = static_cast<double>(km.size());
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    stats.ci95 = 1.96 * sd / std::sqrt(n);

    std::sort(km.begin(), km.end());
    stats.q25 = quantile(km, 0.25);
    stats.median = quantile(km, 0.50);
    stats.q75 = quantile(km, 0.75);
    return stats;
}

std::vector<std::array<double, kTemporalStates>> temporal_shares(const Schedules& schedules,
                                                                 const TravelTimeFn& travel_time,
                                                                 double step_minutes)
{
    if (schedules.empty() || !(step_minutes > 0.0)) {
        throw ArgumentError("temporal shares need schedules and a positive step");
    }
    std::size_t days = 0;
    for (const auto& agent : schedules) {
        days = std::max(days, agent.size());
    }
    const double horizon_min = static_cast<double>(days) * 1440.0;
    const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon_min / step_minutes));

    std::vector<std::array<double, kTemporalStates>> shares(
        steps, std::array<double, kTemporalStates>{});

    // Per agent: build the state timeline as (end_minute, state) breakpoints.
    for (const auto& agent : schedules) {
        std::vector<std::pair<double, std::size_t>> segments;
        for (std::size_t d = 0; d < agent.size(); ++d) {
            const auto& day = agent[d];
            const double day_start = static_cast<double>(d) * 1440.0;
            const double day_end = day_start + 1440.0;
            double clock = day_start;
            for (std::size_t i = 0; i < day.size(); ++i) {
                const bool last = i + 1 == day.size();
                if (last) {
                    // Open-ended final activity runs to midnight (or is
                    // squeezed out when travel overran the day).
                    segments.emplace_back(day_end, static_cast<std::size_t>(day[i].type));
                    clock = day_end;
                    break;
                }
                const double dwell = std::min(day[i].dwell_minutes.value_or(0.0), day_end - clock);
                clock += dwell;
                segments.emplace_back(clock, static_cast<std::size_t>(day[i].type));
                if (day[i].location == day[i + 1].location) {
                    continue;
                }
                const double t_min = travel_time(day[i].location, day[i + 1].location) / 60.0;
                clock = std::min(clock + t_min, day_end);
                segments.emplace_back(clock, kMovingState);
            }
        }
        // Sample the timeline on the step grid.
        std::size_t seg = 0;
        for (std::size_t s = 0; s < steps; ++s) {
            const double t = static_cast<double>(s) * step_minutes;
            while (seg < segments.size() && segments[seg].first <= t) {
                ++seg;
            }
            const std::size_t state =
                seg < segments.size() ? segments[seg].second
                                      : static_cast<std::size_t>(ActivityType::home);
            shares[s][state] += 1.0;
        }
    }

    const double n = static_cast<double>(schedules.size());
    for (auto& row : shares) {
        for (double& v : row) {
            v /= n;
        }
    }
    return shares;
}

std::vector<Trip> extract_trips(const Schedules& schedules)
{
    std::vector<Trip> trips;
    for (const auto& agent : schedules) {
        for (const auto& day : agent) {
            for (std::size_t i = 0; i + 1 < day.size(); ++i) {
                trips.push_back(
                    Trip{day[i].location, day[i + 1].location, day[i + 1].type});
            }
        }
    }
    return trips;
}

} // namespace mobgen::val
