#include "mobgen/population.hpp"

#include <cmath>

#include <json.hpp>

#include "mobgen/errors.hpp"
#include "mobgen/util.hpp"

namespace mobgen::pop {

void SocioDistribution::validate() const
{
    double total = 0.0;
    for (const auto& atom : atoms) {
        if (atom.probability < 0.0) {
            throw SchemaError("socio-demographic probabilities must be non-negative");
        }
        total += atom.probability;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw SchemaError("socio-demographic probabilities must sum to 1 (got " +
                          std::to_string(total) + ")");
    }
}

SocioDistribution SocioDistribution::load(const std::filesystem::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(util::read_file(path));
    }
    catch (const nlohmann::json::exception& e) {
        throw SchemaError("bad socio-demographics file " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) {
        throw SchemaError("socio-demographics file must hold a JSON array of atoms");
    }
    SocioDistribution dist;
    for (const auto& atom : doc) {
        SocioDistribution::Atom a;
        a.features.age = age_from_string(atom.at("age").get<std::string>());
        a.features.homogenous_group =
            homogenous_from_string(atom.at("homogenous_group").get<std::string>());
        a.features.mobility_group =
            mobility_from_string(atom.at("mobility_group").get<std::string>());
        a.probability = atom.at("p").get<double>();
        dist.atoms.push_back(a);
    }
    dist.validate();
    return dist;
}

SocioFeatures sample_sociodemographics(const SocioDistribution* dist, Rng& rng)
{
    if (dist == nullptr || dist->atoms.empty()) {
        return SocioFeatures{}; // everything undefined
    }
    std::vector<double> weights;
    weights.reserve(dist->atoms.size());
    for (const auto& atom : dist->atoms) {
        weights.push_back(atom.probability);
    }
    return dist->atoms[rng.discrete(weights)].features;
}

std::uint32_t sample_home(const ChoiceContext& ctx, Rng& rng)
{
    const auto& buildings = *ctx.buildings;
    if (ctx.census_present) {
        std::vector<double> weights(buildings.size());
        double total = 0.0;
        for (std::size_t i = 0; i < buildings.size(); ++i) {
            weights[i] = buildings[i].population;
            total += weights[i];
        }
        if (total > 0.0) {
            return static_cast<std::uint32_t>(rng.discrete(weights));
        }
        // No populated building after all; fall through to the model.
    }
    return dest::choose_destination(0, Purpose::home, *ctx.cells, buildings, *ctx.attraction,
                                    *ctx.distances, *ctx.deterrence, rng,
                                    /*ignore_deterrence=*/true);
}

std::uint32_t assign_fixed_location(Agent& agent, Purpose purpose, const ChoiceContext& ctx,
                                    Rng& rng)
{
    if (purpose != Purpose::work && purpose != Purpose::school) {
        throw ArgumentError("fixed locations exist only for work and school");
    }
    auto& slot = purpose == Purpose::work ? agent.work : agent.school;
    if (slot) {
        return *slot;
    }
    const std::uint32_t origin_cell = (*ctx.building_cell)[agent.home];
    const std::uint32_t building =
        dest::choose_destination(origin_cell, purpose, *ctx.cells, *ctx.buildings,
                                 *ctx.attraction, *ctx.distances, *ctx.deterrence, rng);
    slot = building;
    return building;
}

std::vector<Agent> create_population(std::size_t n, const ChoiceContext& ctx,
                                     const SocioDistribution* dist, std::uint64_t seed,
                                     unsigned threads)
{
    if (n == 0) {
        throw ArgumentError("population size must be at least 1");
    }
    if (dist != nullptr) {
        dist->validate();
    }

    // Census homes share one cumulative weight vector across all agents.
    std::vector<double> cumulative;
    if (ctx.census_present) {
        cumulative.reserve(ctx.buildings->size());
        double acc = 0.0;
        for (const auto& b : *ctx.buildings) {
            acc += b.population;
            cumulative.push_back(acc);
        }
        if (!(acc > 0.0)) {
            cumulative.clear();
        }
    }

    std::vector<Agent> agents(n);
    util::parallel_for(n, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i, /*substream=*/0));
        Agent& agent = agents[i];
        agent.id = i;
        agent.features = sample_sociodemographics(dist, rng);
        if (!cumulative.empty()) {
            agent.home = static_cast<std::uint32_t>(rng.discrete_cumulative(cumulative));
        }
        else {
            ChoiceContext no_census = ctx;
            no_census.census_present = false;
            agent.home = sample_home(no_census, rng);
        }
    });
    return agents;
}

} // namespace mobgen::pop
