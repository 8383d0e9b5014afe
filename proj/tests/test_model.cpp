#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mobgen/destination.hpp"
#include "mobgen/errors.hpp"
#include "mobgen/validation.hpp"
#include "support/fixtures.hpp"

using namespace mobgen;

namespace {

const LonLat kCenter{10.0, 50.0};

Building bare_building()
{
    Building b;
    b.id = 1;
    b.coordinates = kCenter;
    b.area = 123.0;
    b.landuse = Landuse::none;
    return b;
}

/// Model whose buildings sit on a west-east line; tight threshold keeps one
/// building per cell.
sim::Model line_model(const std::vector<double>& positions_m, std::uint32_t shops_each = 0)
{
    geo::Projection proj(kCenter);
    std::vector<Building> buildings;
    for (std::size_t i = 0; i < positions_m.size(); ++i) {
        Building b;
        b.id = static_cast<std::int64_t>(i + 1);
        b.coordinates = proj.unproject(geo::XY{positions_m[i], 0.0});
        b.area = 100.0;
        b.n_shops = shops_each;
        buildings.push_back(b);
    }
    const auto focus = fixtures::square_area(kCenter, 1.0e6);
    return fixtures::make_model(std::move(buildings), focus, AttractionCoeffs::defaults(), 10.0);
}

} // namespace

TEST_CASE("attraction: shipped coefficient table, exact values")
{
    const auto coeffs = AttractionCoeffs::defaults();

    Building shop = bare_building();
    shop.n_shops = 1;
    CHECK(attraction(shop, Purpose::shopping, coeffs) == doctest::Approx(349.44).epsilon(1e-9));

    Building residential = bare_building();
    residential.landuse = Landuse::residential;
    residential.area = 200.0;
    CHECK(attraction(residential, Purpose::home, coeffs) == doctest::Approx(7.54).epsilon(1e-9));

    CHECK(attraction(bare_building(), Purpose::home, coeffs) == doctest::Approx(1.0));
    CHECK(attraction(bare_building(), Purpose::work, coeffs) == doctest::Approx(1.0));
    CHECK(attraction(bare_building(), Purpose::shopping, coeffs) == doctest::Approx(1.0));
}

TEST_CASE("attraction: landuse gates the area slot and the indicator")
{
    const auto coeffs = AttractionCoeffs::defaults();
    Building b = bare_building();
    b.landuse = Landuse::residential;
    b.area = 300.0;
    CHECK(attraction(b, Purpose::home, coeffs) == doctest::Approx(1.0 + 0.0327 * 300.0));
    b.landuse = Landuse::commercial;
    CHECK(attraction(b, Purpose::home, coeffs) == doctest::Approx(1.0)); // theta2 is zero

    for (auto purpose : kAllActivities) {
        CHECK(attraction(b, purpose, coeffs) >= 1.0);
    }
}

TEST_CASE("deterrence: shipped table values")
{
    const auto det = DeterrenceSet::defaults();
    CHECK(std::exp(log_deterrence(1.0, det.for_purpose(Purpose::shopping))) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(log_deterrence(1.0, det.for_purpose(Purpose::work)) ==
          doctest::Approx(-0.035).epsilon(1e-9));
    CHECK(std::exp(log_deterrence(900.0, det.for_purpose(Purpose::school))) == 0.0);
    CHECK(std::isinf(log_deterrence(828.0, det.for_purpose(Purpose::school))));
    CHECK(std::isfinite(log_deterrence(826.0, det.for_purpose(Purpose::school))));
}

TEST_CASE("deterrence: functional forms and the distance floor")
{
    DeterrenceParams pe;
    pe.form = DeterrenceForm::PE;
    pe.theta = {-0.1, -0.5, 0.0};
    const double d = 3.7;
    CHECK(log_deterrence(d, pe) == doctest::Approx(-0.1 * d - 0.5 * std::log(d)).epsilon(1e-12));

    DeterrenceParams le;
    le.form = DeterrenceForm::LE;
    le.theta = {-0.2, -1.1, 0.004};
    const double ld = std::log(d);
    CHECK(log_deterrence(d, le) ==
          doctest::Approx(-0.2 * ld * ld - 1.1 * ld + 0.004 * d).epsilon(1e-12));

    DeterrenceParams l;
    l.form = DeterrenceForm::L;
    l.theta = {-0.215, -1.414, 0.0};
    CHECK(log_deterrence(0.0, l) == doctest::Approx(log_deterrence(0.05, l)).epsilon(1e-12));
    CHECK(log_deterrence(0.01, l) == doctest::Approx(log_deterrence(0.05, l)).epsilon(1e-12));
}

TEST_CASE("destination_probabilities: single cell, normalization, scale invariance")
{
    auto model = line_model({0.0}, 1);
    const auto det = DeterrenceSet::defaults();

    const auto p1 = dest::destination_probabilities(0, Purpose::shopping, model.cells,
                                                    *model.distances, det);
    REQUIRE(p1.size() == 1);
    CHECK(p1[0] == doctest::Approx(1.0).epsilon(1e-12));

    auto model5 = line_model({0.0, 1500.0, 3100.0, 5200.0, 8800.0}, 1);
    const auto p5 = dest::destination_probabilities(0, Purpose::shopping, model5.cells,
                                                    *model5.distances, det);
    double total = 0.0;
    for (double p : p5) {
        total += p;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    auto scaled = model5.cells;
    for (auto& cell : scaled) {
        for (auto& a : cell.attraction) {
            a *= 37.5;
        }
    }
    const auto p5s =
        dest::destination_probabilities(0, Purpose::shopping, scaled, *model5.distances, det);
    for (std::size_t i = 0; i < p5.size(); ++i) {
        CHECK(p5s[i] == doctest::Approx(p5[i]).epsilon(1e-12));
    }
}

TEST_CASE("destination_probabilities: closed-form odds for two equal cells")
{
    auto model = line_model({0.0, 1000.0, 2000.0}, 1);
    const auto det = DeterrenceSet::defaults();
    const auto p = dest::destination_probabilities(0, Purpose::shopping, model.cells,
                                                   *model.distances, det);
    const double ln2 = std::log(2.0);
    const double expected_odds = std::exp(0.215 * ln2 * ln2 + 1.414 * ln2);
    CHECK(p[1] / p[2] == doctest::Approx(expected_odds).epsilon(1e-6));
}

TEST_CASE("destination_probabilities: monotone decay beyond 1 km for shopping")
{
    std::vector<double> positions{0.0};
    for (int i = 0; i < 12; ++i) {
        positions.push_back(1000.0 + i * 700.0);
    }
    auto model = line_model(positions, 1);
    const auto det = DeterrenceSet::defaults();
    const auto p = dest::destination_probabilities(0, Purpose::shopping, model.cells,
                                                   *model.distances, det);
    for (std::size_t i = 2; i < p.size(); ++i) {
        CHECK(p[i] < p[i - 1]);
    }
}

TEST_CASE("destination_probabilities: all weights zero raises a diagnostic error")
{
    auto model = line_model({0.0, 900000.0, 950000.0}, 0);
    auto det = DeterrenceSet::defaults();
    model.cells[0].attraction[static_cast<std::size_t>(Purpose::school)] = 0.0;
    CHECK_THROWS_AS(dest::destination_probabilities(0, Purpose::school, model.cells,
                                                    *model.distances, det),
                    DegenerateChoiceError);
}

TEST_CASE("destination_probabilities: home ignores deterrence")
{
    auto model = line_model({0.0, 2000.0, 40000.0}, 0);
    const auto det = DeterrenceSet::defaults();
    const auto p =
        dest::destination_probabilities(0, Purpose::home, model.cells, *model.distances, det);
    // Identical buildings: identical probabilities regardless of distance.
    CHECK(p[0] == doctest::Approx(p[2]).epsilon(1e-12));
}

TEST_CASE("two-stage sampling: within-cell split follows attraction")
{
    geo::Projection proj(kCenter);
    std::vector<Building> buildings;
    for (int i = 0; i < 2; ++i) {
        Building b;
        b.id = i + 1;
        b.coordinates = proj.unproject(geo::XY{i * 10.0, 0.0});
        b.area = 100.0;
        b.n_shops = i == 0 ? 1 : 0;
        buildings.push_back(b);
    }
    const auto focus = fixtures::square_area(kCenter, 5000.0);
    auto model =
        fixtures::make_model(std::move(buildings), focus, AttractionCoeffs::defaults(), 150.0);
    REQUIRE(model.cells.size() == 1);

    Rng rng(9001);
    const int draws = 100000;
    int shop_hits = 0;
    for (int i = 0; i < draws; ++i) {
        const auto b = dest::choose_destination(0, Purpose::shopping, model.cells,
                                                model.buildings, AttractionCoeffs::defaults(),
                                                *model.distances, DeterrenceSet::defaults(), rng);
        if (model.buildings[b].n_shops > 0) {
            ++shop_hits;
        }
    }
    const double p = 349.44 / 350.44;
    const double sigma = std::sqrt(p * (1.0 - p) * draws);
    CHECK(std::abs(shop_hits - p * draws) <= 3.0 * sigma);
}

TEST_CASE("two-stage distribution approximates the exact building-level MNL")
{
    const auto focus = fixtures::square_area(kCenter, 4000.0);
    auto town = fixtures::toy_town(120, 21, kCenter, 2500.0);
    auto model = fixtures::make_model(std::move(town), focus, AttractionCoeffs::defaults(), 150.0);
    const auto coeffs = AttractionCoeffs::defaults();
    const auto det = DeterrenceSet::defaults();
    REQUIRE(model.cells.size() >= 20);

    const std::uint32_t origin_building = 0;
    const std::uint32_t origin_cell = model.building_cell[origin_building];

    // Exact building-level MNL with exact distances.
    std::vector<double> exact(model.buildings.size());
    double exact_total = 0.0;
    for (std::size_t b = 0; b < model.buildings.size(); ++b) {
        const double d_km = geo::haversine_m(model.buildings[origin_building].coordinates,
                                             model.buildings[b].coordinates) /
                            1000.0;
        exact[b] = attraction(model.buildings[b], Purpose::shopping, coeffs) *
                   std::exp(log_deterrence(d_km, det.for_purpose(Purpose::shopping)));
        exact_total += exact[b];
    }
    for (double& v : exact) {
        v /= exact_total;
    }

    // Closed-form two-stage distribution (cell draw times in-cell split).
    const auto cell_p = dest::destination_probabilities(origin_cell, Purpose::shopping,
                                                        model.cells, *model.distances, det);
    std::vector<double> two_stage(model.buildings.size(), 0.0);
    for (std::size_t c = 0; c < model.cells.size(); ++c) {
        const auto& cell = model.cells[c];
        double cell_attr = 0.0;
        for (auto b : cell.members) {
            cell_attr += attraction(model.buildings[b], Purpose::shopping, coeffs);
        }
        for (auto b : cell.members) {
            two_stage[b] =
                cell_p[c] * attraction(model.buildings[b], Purpose::shopping, coeffs) / cell_attr;
        }
    }

    CHECK(val::jensen_shannon(two_stage, exact) < 0.05);
}

TEST_CASE("snap_to_cell returns the nearest centroid")
{
    auto model = line_model({0.0, 5000.0, 10000.0}, 0);
    geo::Projection proj(kCenter);
    CHECK(dest::snap_to_cell(proj.unproject(geo::XY{400.0, 0.0}), model.cells) ==
          model.cells[0].id);
    CHECK(dest::snap_to_cell(proj.unproject(geo::XY{5600.0, 0.0}), model.cells) ==
          model.cells[1].id);
}
