#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "mobgen/destination.hpp"
#include "mobgen/rng.hpp"

namespace mobgen::pop {

struct Agent {
    std::uint64_t id = 0;
    SocioFeatures features;
    std::uint32_t home = 0;
    std::optional<std::uint32_t> work;   // fixed on first use
    std::optional<std::uint32_t> school; // fixed on first use
};

/// Joint socio-demographic distribution as a list of probability atoms.
struct SocioDistribution {
    struct Atom {
        SocioFeatures features;
        double probability = 0.0;
    };
    std::vector<Atom> atoms;

    void validate() const; // throws SchemaError unless probabilities sum to 1
    static SocioDistribution load(const std::filesystem::path& path);
};

/// Everything a choice needs: buildings, grid with aggregated attractions,
/// distances, coefficients. `census_present` switches the home model.
struct ChoiceContext {
    const std::vector<Building>* buildings = nullptr;
    const std::vector<grid::GridCell>* cells = nullptr;
    const std::vector<std::uint32_t>* building_cell = nullptr; // building -> cell id
    const dest::DistanceProvider* distances = nullptr;
    const AttractionCoeffs* attraction = nullptr;
    const DeterrenceSet* deterrence = nullptr;
    bool census_present = false;
};

/// Draw socio-demographic features; without a distribution everything is
/// undefined.
SocioFeatures sample_sociodemographics(const SocioDistribution* dist, Rng& rng);

/// Home draw: proportional to building population when census data exists,
/// otherwise the destination-choice home model with deterrence 1.
std::uint32_t sample_home(const ChoiceContext& ctx, Rng& rng);

/// Work or school location: one destination-choice draw from home, cached on
/// the agent afterwards.
std::uint32_t assign_fixed_location(Agent& agent, Purpose purpose, const ChoiceContext& ctx,
                                    Rng& rng);

/// n agents with features and homes; fixed locations stay unassigned until
/// first use. Deterministic per seed and independent of the worker count.
std::vector<Agent> create_population(std::size_t n, const ChoiceContext& ctx,
                                     const SocioDistribution* dist, std::uint64_t seed,
                                     unsigned threads = 1);

} // namespace mobgen::pop
