#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "mobgen/attraction.hpp"
#include "mobgen/deterrence.hpp"
#include "mobgen/grid.hpp"
#include "mobgen/rng.hpp"
#include "mobgen/routing.hpp"

namespace mobgen::dest {

/// Cell-to-cell distance source: precomputed matrix or on-the-fly beeline.
class DistanceProvider {
public:
    virtual ~DistanceProvider() = default;
    virtual double meters(std::uint32_t from_cell, std::uint32_t to_cell) const = 0;
};

class MatrixDistance final : public DistanceProvider {
public:
    explicit MatrixDistance(const routing::DistanceMatrix& matrix) : matrix_(&matrix) {}
    double meters(std::uint32_t from, std::uint32_t to) const override
    {
        return matrix_->meters(from, to);
    }

private:
    const routing::DistanceMatrix* matrix_;
};

class OwningMatrixDistance final : public DistanceProvider {
public:
    explicit OwningMatrixDistance(routing::DistanceMatrix matrix) : matrix_(std::move(matrix)) {}
    double meters(std::uint32_t from, std::uint32_t to) const override
    {
        return matrix_.meters(from, to);
    }
    const routing::DistanceMatrix& matrix() const { return matrix_; }

private:
    routing::DistanceMatrix matrix_;
};

class BeelineDistance final : public DistanceProvider {
public:
    explicit BeelineDistance(std::vector<LonLat> centroids) : centroids_(std::move(centroids)) {}
    double meters(std::uint32_t from, std::uint32_t to) const override
    {
        return geo::haversine_m(centroids_[from], centroids_[to]);
    }

private:
    std::vector<LonLat> centroids_;
};

/// P(cell) over all grid cells for a trip with the given purpose starting at
/// `origin_cell`. Proportional to aggregated attraction times deterrence of
/// the origin-to-cell distance; `ignore_deterrence` evaluates f == 1 (home
/// choice without census data).
std::vector<double> destination_probabilities(std::uint32_t origin_cell, Purpose purpose,
                                              const std::vector<grid::GridCell>& cells,
                                              const DistanceProvider& distances,
                                              const DeterrenceSet& deterrence,
                                              bool ignore_deterrence = false);

/// Two-stage draw: a cell by the cell-level distribution, then a member
/// building by its own attraction, ignoring within-cell distances.
std::uint32_t choose_destination(std::uint32_t origin_cell, Purpose purpose,
                                 const std::vector<grid::GridCell>& cells,
                                 const std::vector<Building>& buildings,
                                 const AttractionCoeffs& coeffs,
                                 const DistanceProvider& distances,
                                 const DeterrenceSet& deterrence, Rng& rng,
                                 bool ignore_deterrence = false);

/// Stage-two draw on its own: building within a known cell.
std::uint32_t choose_building_in_cell(const grid::GridCell& cell,
                                      const std::vector<Building>& buildings, Purpose purpose,
                                      const AttractionCoeffs& coeffs, Rng& rng);

/// Nearest cell by centroid distance; used to snap free origins.
std::uint32_t snap_to_cell(const LonLat& p, const std::vector<grid::GridCell>& cells);

} // namespace mobgen::dest
