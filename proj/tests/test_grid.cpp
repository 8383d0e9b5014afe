#include <doctest.h>

#include <random>

#include "mobgen/grid.hpp"
#include "mobgen/util.hpp"
#include "support/fixtures.hpp"

using namespace mobgen;

namespace {

const LonLat kCenter{10.0, 50.0};

double mean_dispersion(const std::vector<geo::XY>& points,
                       const std::vector<std::vector<std::size_t>>& clusters)
{
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& cluster : clusters) {
        double cx = 0.0, cy = 0.0;
        for (std::size_t i : cluster) {
            cx += points[i].x();
            cy += points[i].y();
        }
        cx /= static_cast<double>(cluster.size());
        cy /= static_cast<double>(cluster.size());
        for (std::size_t i : cluster) {
            total += std::hypot(points[i].x() - cx, points[i].y() - cy);
            ++n;
        }
    }
    return total / static_cast<double>(n);
}

/// Reference: plain Lloyd k-means, increasing k until the dispersion target
/// is met. Deterministic seeded init.
std::size_t lloyd_cluster_count(const std::vector<geo::XY>& points, double threshold,
                                std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    for (std::size_t k = 1; k <= points.size(); ++k) {
        std::vector<geo::XY> centers;
        std::sample(points.begin(), points.end(), std::back_inserter(centers), k, rng);
        std::vector<std::size_t> assign(points.size(), 0);
        for (int iter = 0; iter < 100; ++iter) {
            bool changed = false;
            for (std::size_t i = 0; i < points.size(); ++i) {
                std::size_t best = 0;
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t c = 0; c < centers.size(); ++c) {
                    const double d = std::hypot(points[i].x() - centers[c].x(),
                                                points[i].y() - centers[c].y());
                    if (d < best_d) {
                        best_d = d;
                        best = c;
                    }
                }
                if (assign[i] != best) {
                    assign[i] = best;
                    changed = true;
                }
            }
            std::vector<double> cx(k, 0.0), cy(k, 0.0), cn(k, 0.0);
            for (std::size_t i = 0; i < points.size(); ++i) {
                cx[assign[i]] += points[i].x();
                cy[assign[i]] += points[i].y();
                cn[assign[i]] += 1.0;
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (cn[c] > 0.0) {
                    centers[c] = geo::XY{cx[c] / cn[c], cy[c] / cn[c]};
                }
            }
            if (!changed) {
                break;
            }
        }
        std::vector<std::vector<std::size_t>> clusters(k);
        for (std::size_t i = 0; i < points.size(); ++i) {
            clusters[assign[i]].push_back(i);
        }
        std::erase_if(clusters, [](const auto& c) { return c.empty(); });
        if (mean_dispersion(points, clusters) < threshold) {
            return clusters.size();
        }
    }
    return points.size();
}

} // namespace

TEST_CASE("bisecting_kmeans: identical points collapse to one cluster")
{
    std::vector<geo::XY> points(40, geo::XY{5.0, 5.0});
    const auto clusters = grid::bisecting_kmeans(points, 150.0);
    CHECK(clusters.size() == 1);
    CHECK(clusters[0].size() == 40);
}

TEST_CASE("bisecting_kmeans: two tight groups far apart give two clusters")
{
    std::vector<geo::XY> points;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 20.0);
    for (int i = 0; i < 50; ++i) {
        points.emplace_back(noise(rng), noise(rng));
    }
    for (int i = 0; i < 50; ++i) {
        points.emplace_back(10000.0 + noise(rng), noise(rng));
    }
    const auto clusters = grid::bisecting_kmeans(points, 150.0);
    CHECK(clusters.size() == 2);
    for (const auto& cluster : clusters) {
        CHECK(cluster.size() == 50);
    }
}

TEST_CASE("bisecting_kmeans: dispersion target met, cluster count near the Lloyd oracle")
{
    std::vector<geo::XY> points;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coord(0.0, 5000.0);
    for (int i = 0; i < 500; ++i) {
        points.emplace_back(coord(rng), coord(rng));
    }
    const double threshold = 150.0;
    const auto clusters = grid::bisecting_kmeans(points, threshold);
    CHECK(mean_dispersion(points, clusters) < threshold);

    const std::size_t reference = lloyd_cluster_count(points, threshold, 4);
    CHECK(clusters.size() <= 2 * reference);
    CHECK(2 * clusters.size() >= reference);

    // Partition: every point in exactly one cluster.
    std::vector<int> seen(points.size(), 0);
    for (const auto& cluster : clusters) {
        for (std::size_t i : cluster) {
            seen[i] += 1;
        }
    }
    for (int s : seen) {
        CHECK(s == 1);
    }
}

TEST_CASE("bisecting_kmeans input validation")
{
    CHECK_THROWS_AS(grid::bisecting_kmeans({}, 150.0), ArgumentError);
    CHECK_THROWS_AS(grid::bisecting_kmeans({geo::XY{0, 0}}, 0.0), ArgumentError);
}

TEST_CASE("build_grid: single-tier town")
{
    const auto focus = fixtures::square_area(kCenter, 3000.0);
    auto buildings = fixtures::toy_town(400, 11, kCenter, 2000.0);
    for (auto& b : buildings) {
        b.in_focus_area = true;
    }
    const auto cells = grid::build_grid(buildings, focus, 150.0);
    for (const auto& cell : cells) {
        CHECK(cell.tier == 0);
    }

    // Partition and centroid definition.
    std::vector<int> seen(buildings.size(), 0);
    for (const auto& cell : cells) {
        double lon = 0.0, lat = 0.0;
        for (auto b : cell.members) {
            seen[b] += 1;
            lon += buildings[b].coordinates.lon;
            lat += buildings[b].coordinates.lat;
        }
        const double n = static_cast<double>(cell.members.size());
        CHECK(cell.centroid.lon == doctest::Approx(lon / n).epsilon(1e-12));
        CHECK(cell.centroid.lat == doctest::Approx(lat / n).epsilon(1e-12));
    }
    for (int s : seen) {
        CHECK(s == 1);
    }

    // Mean in-cell dispersion below the tier threshold.
    geo::Projection proj = focus.projection();
    std::vector<geo::XY> points;
    for (const auto& b : buildings) {
        points.push_back(proj.project(b.coordinates));
    }
    std::vector<std::vector<std::size_t>> clusters;
    for (const auto& cell : cells) {
        clusters.emplace_back(cell.members.begin(), cell.members.end());
    }
    CHECK(mean_dispersion(points, clusters) < 150.0);
}

TEST_CASE("build_grid: buffer rings coarsen with distance")
{
    const auto focus = fixtures::square_area(kCenter, 1000.0);
    geo::Projection proj = focus.projection();

    std::vector<Building> buildings;
    auto add_at = [&](double x_m, bool focus_flag, std::int64_t id) {
        Building b;
        b.id = id;
        b.coordinates = proj.unproject(geo::XY{x_m, 0.0});
        b.area = 100.0;
        b.in_focus_area = focus_flag;
        buildings.push_back(b);
    };
    add_at(0.0, true, 1);
    add_at(200.0, true, 2);
    add_at(1000.0 + 5000.0, false, 3);  // 5 km outside the focus edge
    add_at(1000.0 + 15000.0, false, 4); // 15 km outside

    const auto cells = grid::build_grid(buildings, focus, 150.0);
    std::map<std::uint32_t, int> tier_of_building;
    for (const auto& cell : cells) {
        for (auto b : cell.members) {
            tier_of_building[b] = cell.tier;
        }
    }
    CHECK(tier_of_building[0] == 0);
    CHECK(tier_of_building[1] == 0);
    CHECK(tier_of_building[2] == 1);
    CHECK(tier_of_building[3] == 2);
}

TEST_CASE("build_grid: aggregated attraction additivity is exact")
{
    const auto focus = fixtures::square_area(kCenter, 3000.0);
    auto buildings = fixtures::toy_town(1000, 5, kCenter, 2500.0);
    auto cells = grid::build_grid(buildings, focus, 150.0);
    const auto coeffs = AttractionCoeffs::defaults();
    grid::aggregate_attractions(cells, buildings, coeffs);

    for (auto purpose : kAllActivities) {
        double from_cells = 0.0;
        for (const auto& cell : cells) {
            from_cells += cell.attraction[static_cast<std::size_t>(purpose)];
        }
        double from_buildings = 0.0;
        for (const auto& b : buildings) {
            from_buildings += attraction(b, purpose, coeffs);
        }
        CHECK(from_cells == doctest::Approx(from_buildings).epsilon(1e-9));
    }
}

TEST_CASE("grid JSON round trip")
{
    fixtures::TempDir tmp;
    const auto focus = fixtures::square_area(kCenter, 2000.0);
    auto buildings = fixtures::toy_town(150, 8, kCenter, 1500.0);
    for (auto& b : buildings) {
        b.in_focus_area = focus.focus_contains(b.coordinates);
    }
    const auto cells = grid::build_grid(buildings, focus, 150.0);
    grid::save_grid(cells, tmp.file("grid.json"));
    const auto loaded = grid::load_grid(tmp.file("grid.json"), buildings);
    REQUIRE(loaded.size() == cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(loaded[i].id == cells[i].id);
        CHECK(loaded[i].members == cells[i].members);
        CHECK(loaded[i].tier == cells[i].tier);
        CHECK(loaded[i].centroid.lon == doctest::Approx(cells[i].centroid.lon).epsilon(1e-12));
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            CHECK(loaded[i].feature_sums[k] ==
                  doctest::Approx(cells[i].feature_sums[k]).epsilon(1e-12));
        }
    }
}
