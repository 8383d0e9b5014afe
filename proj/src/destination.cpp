#include "mobgen/destination.hpp"

#include <cmath>
#include <limits>

#include "mobgen/errors.hpp"

namespace mobgen::dest {

std::vector<double> destination_probabilities(std::uint32_t origin_cell, Purpose purpose,
                                              const std::vector<grid::GridCell>& cells,
                                              const DistanceProvider& distances,
                                              const DeterrenceSet& deterrence,
                                              bool ignore_deterrence)
{
    if (cells.empty()) {
        throw ArgumentError("destination choice over an empty grid");
    }
    const std::size_t p = static_cast<std::size_t>(purpose);
    const DeterrenceParams& det = deterrence.for_purpose(purpose);

    // Utilities in log space; shift by the maximum before exponentiation.
    std::vector<double> log_w(cells.size());
    double max_lw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double a = cells[i].attraction[p];
        double lw;
        if (!(a > 0.0)) {
            lw = -std::numeric_limits<double>::infinity();
        }
        else if (ignore_deterrence || purpose == Purpose::home) {
            lw = std::log(a);
        }
        else {
            const double d_km = distances.meters(origin_cell, cells[i].id) / 1000.0;
            lw = std::log(a) + log_deterrence(d_km, det);
        }
        log_w[i] = lw;
        max_lw = std::max(max_lw, lw);
    }
    if (!std::isfinite(max_lw)) {
        throw DegenerateChoiceError("all destination weights are zero for purpose " +
                                    std::string(to_string(purpose)) + " from cell " +
                                    std::to_string(origin_cell));
    }
    double total = 0.0;
    std::vector<double> prob(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double w = std::exp(log_w[i] - max_lw);
        prob[i] = w;
        total += w;
    }
    for (double& v : prob) {
        v /= total;
    }
    return prob;
}

std::uint32_t choose_building_in_cell(const grid::GridCell& cell,
                                      const std::vector<Building>& buildings, Purpose purpose,
                                      const AttractionCoeffs& coeffs, Rng& rng)
{
    if (cell.members.empty()) {
        throw DegenerateChoiceError("grid cell without members");
    }
    if (cell.members.size() == 1) {
        return cell.members[0];
    }
    std::vector<double> weights(cell.members.size());
    for (std::size_t i = 0; i < cell.members.size(); ++i) {
        weights[i] = attraction(buildings[cell.members[i]], purpose, coeffs);
    }
    return cell.members[rng.discrete(weights)];
}

std::uint32_t choose_destination(std::uint32_t origin_cell, Purpose purpose,
                                 const std::vector<grid::GridCell>& cells,
                                 const std::vector<Building>& buildings,
                                 const AttractionCoeffs& coeffs,
                                 const DistanceProvider& distances,
                                 const DeterrenceSet& deterrence, Rng& rng,
                                 bool ignore_deterrence)
{
    const auto prob = destination_probabilities(origin_cell, purpose, cells, distances,
                                                deterrence, ignore_deterrence);
    const std::size_t cell_idx = rng.discrete(prob);
    return choose_building_in_cell(cells[cell_idx], buildings, purpose, coeffs, rng);
}

std::uint32_t snap_to_cell(const LonLat& p, const std::vector<grid::GridCell>& cells)
{
    if (cells.empty()) {
        throw ArgumentError("snap over an empty grid");
    }
    std::uint32_t best = cells[0].id;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& cell : cells) {
        const double d = geo::haversine_m(p, cell.centroid);
        if (d < best_d) {
            best_d = d;
            best = cell.id;
        }
    }
    return best;
}

} // namespace mobgen::dest
