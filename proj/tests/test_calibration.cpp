#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "mobgen/calibration.hpp"
#include "mobgen/errors.hpp"
#include "mobgen/synthetic.hpp"
#include "mobgen/util.hpp"
#include "support/fixtures.hpp"

using namespace mobgen;
using calib::CellTable;
using calib::Survey;
using calib::SurveyTrip;
using A = ActivityType;

namespace {

/// Destinations drawn from the attraction-only marginal (origin-free data).
std::vector<SurveyTrip> sample_marginal_trips(const CellTable& cells,
                                              const std::array<double, kFeatureCount>& theta,
                                              Purpose purpose, std::size_t n, Rng& rng)
{
    std::vector<double> cumulative;
    cumulative.reserve(cells.cells.size());
    double acc = 0.0;
    for (const auto& c : cells.cells) {
        double a = c.count;
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            a += theta[k] * c.features[k];
        }
        acc += a;
        cumulative.push_back(acc);
    }
    std::vector<SurveyTrip> trips;
    trips.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto origin = static_cast<std::uint32_t>(rng.index(cells.cells.size()));
        const auto dest = static_cast<std::uint32_t>(rng.discrete_cumulative(cumulative));
        trips.push_back(SurveyTrip{origin, dest, purpose});
    }
    return trips;
}

/// Destinations drawn from the full gravity model, origins uniform.
std::vector<SurveyTrip> sample_gravity_trips(const CellTable& cells,
                                             const std::array<double, kFeatureCount>& theta,
                                             const DeterrenceParams& det, Purpose purpose,
                                             std::size_t n, const calib::DistanceFn& distance,
                                             Rng& rng)
{
    std::vector<double> attraction_of(cells.cells.size());
    for (std::size_t j = 0; j < cells.cells.size(); ++j) {
        double a = cells.cells[j].count;
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            a += theta[k] * cells.cells[j].features[k];
        }
        attraction_of[j] = a;
    }
    std::map<std::uint32_t, std::vector<double>> cumulative_cache;
    std::vector<SurveyTrip> trips;
    trips.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto origin = static_cast<std::uint32_t>(rng.index(cells.cells.size()));
        auto it = cumulative_cache.find(origin);
        if (it == cumulative_cache.end()) {
            std::vector<double> cumulative(cells.cells.size());
            double acc = 0.0;
            for (std::size_t j = 0; j < cells.cells.size(); ++j) {
                const double lw =
                    std::log(attraction_of[j]) +
                    log_deterrence(distance(origin, static_cast<std::uint32_t>(j)) / 1000.0, det);
                acc += std::exp(lw);
                cumulative[j] = acc;
            }
            it = cumulative_cache.emplace(origin, std::move(cumulative)).first;
        }
        const auto dest = static_cast<std::uint32_t>(rng.discrete_cumulative(it->second));
        trips.push_back(SurveyTrip{origin, dest, purpose});
    }
    return trips;
}

SurveyTrip trip(std::uint32_t o, std::uint32_t d)
{
    return SurveyTrip{o, d, Purpose::shopping};
}

} // namespace

TEST_CASE("cell table JSON round trip and validation")
{
    fixtures::TempDir tmp;
    const auto city = calib::make_synthetic_city();
    REQUIRE(city.cells.size() == 1024);
    city.save(tmp.file("cells.json"));
    const auto loaded = CellTable::load(tmp.file("cells.json"));
    REQUIRE(loaded.cells.size() == city.cells.size());
    for (std::size_t i = 0; i < city.cells.size(); ++i) {
        CHECK(loaded.cells[i].count == city.cells[i].count);
        CHECK(loaded.cells[i].features == city.cells[i].features);
        CHECK(loaded.cells[i].coordinates.lon ==
              doctest::Approx(city.cells[i].coordinates.lon).epsilon(1e-12));
    }
    util::write_file(tmp.file("bad.json"), R"({"schema":"mobgen-cells-v1","cells":[{"id":3}]})");
    CHECK_THROWS_AS(CellTable::load(tmp.file("bad.json")), SchemaError);
}

TEST_CASE("survey CSV round trip, marker rows included")
{
    fixtures::TempDir tmp;
    const auto city = calib::make_synthetic_city();
    const auto truth = calib::reference_truth_bundle();
    Rng rng(555);
    calib::SurveyGenOptions options;
    options.sample_weekdays = true;
    const Survey survey = calib::generate_synthetic_survey(truth, city, 500, rng, options);

    bool has_marker_day = false;
    for (const auto& day : survey.days) {
        if (day.chain.size() == 1) {
            has_marker_day = true;
        }
    }
    CHECK(has_marker_day); // stay-home days are common under the truth chains

    survey.save_csv(tmp.file("survey.csv"));
    const Survey loaded = Survey::load_csv(tmp.file("survey.csv"));
    REQUIRE(loaded.days.size() == survey.days.size());
    for (std::size_t i = 0; i < survey.days.size(); ++i) {
        CHECK(loaded.days[i].person_id == survey.days[i].person_id);
        CHECK(loaded.days[i].weekday == survey.days[i].weekday);
        CHECK(loaded.days[i].chain == survey.days[i].chain);
        CHECK(loaded.days[i].cells == survey.days[i].cells);
        REQUIRE(loaded.days[i].dwell_hours.size() == survey.days[i].dwell_hours.size());
        for (std::size_t k = 0; k < survey.days[i].dwell_hours.size(); ++k) {
            CHECK(loaded.days[i].dwell_hours[k] ==
                  doctest::Approx(survey.days[i].dwell_hours[k]).epsilon(1e-9));
        }
    }
    CHECK(loaded.trips().size() == survey.trips().size());
}

TEST_CASE("survey CSV schema errors")
{
    fixtures::TempDir tmp;
    util::write_file(tmp.file("empty.csv"), "");
    CHECK_THROWS_AS(Survey::load_csv(tmp.file("empty.csv")), SchemaError);

    util::write_file(tmp.file("only_header.csv"),
                     "person_id,age,hom_group,mob_group,weekday,trip_index,purpose,origin_cell,"
                     "dest_cell,start_min,end_min\n");
    CHECK_THROWS_AS(Survey::load_csv(tmp.file("only_header.csv")), SchemaError);

    util::write_file(tmp.file("missing_col.csv"),
                     "person_id,age,hom_group,mob_group,weekday,trip_index,origin_cell,"
                     "dest_cell,start_min,end_min\n1,undefined,undefined,undefined,mon,0,3,4,60,60\n");
    try {
        Survey::load_csv(tmp.file("missing_col.csv"));
        FAIL("expected SchemaError");
    }
    catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("purpose") != std::string::npos);
    }
}

TEST_CASE("fit_attraction: analytic two-to-one odds give theta = 1")
{
    CellTable cells;
    for (std::uint32_t i = 0; i < 20; ++i) {
        calib::CellFeatures c;
        c.id = i;
        c.count = 1.0;
        if (i < 10) {
            c.features[kPoiShops] = 1.0;
        }
        cells.cells.push_back(c);
    }
    // Shop cells receive exactly twice the trips of bare cells.
    std::vector<SurveyTrip> trips;
    for (std::uint32_t i = 0; i < 10; ++i) {
        trips.push_back(trip(0, i));
        trips.push_back(trip(0, i));
        trips.push_back(trip(0, i + 10));
    }
    const auto fit = calib::fit_attraction(trips, cells, {kPoiShops});
    CHECK(fit.theta[kPoiShops] == doctest::Approx(1.0).epsilon(0.02));
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        CHECK(fit.theta[k] >= 0.0);
    }
}

TEST_CASE("fit_attraction: flat likelihood stays at the zero bound")
{
    CellTable cells;
    for (std::uint32_t i = 0; i < 10; ++i) {
        calib::CellFeatures c;
        c.id = i;
        c.count = 1.0;
        c.features[kPoiShops] = 1.0; // identical cells: no signal
        cells.cells.push_back(c);
    }
    std::vector<SurveyTrip> trips;
    for (std::uint32_t i = 0; i < 10; ++i) {
        trips.push_back(trip(0, i));
    }
    const auto fit = calib::fit_attraction(trips, cells);
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        CHECK(fit.theta[k] == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    }
    CHECK_THROWS_AS(calib::fit_attraction({}, cells), FitError);
}

TEST_CASE("fit_attraction: recovers the shipped shopping coefficient from sampled data")
{
    const auto city = calib::make_synthetic_city();
    const auto truth = AttractionCoeffs::defaults().for_purpose(Purpose::shopping);
    std::array<double, kFeatureCount> theta{};
    std::copy(truth.begin(), truth.end(), theta.begin());

    Rng rng(2024);
    const auto trips = sample_marginal_trips(city, theta, Purpose::shopping, 50000, rng);
    // The landuse indicators sum to the cell count, so the unreduced model
    // carries a flat direction: recovery runs through feature reduction,
    // exactly like the calibration pipeline.
    const auto active = calib::rank_and_select_features(trips, city);
    const auto fit = calib::fit_attraction(trips, city, active);
    CHECK(fit.theta[kPoiShops] == doctest::Approx(theta[kPoiShops]).epsilon(0.10));
}

TEST_CASE("rank_and_select_features: keeps signal, drops noise")
{
    const auto city = calib::make_synthetic_city();
    std::array<double, kFeatureCount> theta{};
    theta[kPoiShops] = 348.44;

    Rng rng(31337);
    const auto trips = sample_marginal_trips(city, theta, Purpose::shopping, 50000, rng);
    const auto active = calib::rank_and_select_features(trips, city);
    CHECK(active == std::set<std::size_t>{kPoiShops});
}

TEST_CASE("rank_and_select_features: featureless world selects nothing")
{
    CellTable cells;
    for (std::uint32_t i = 0; i < 16; ++i) {
        calib::CellFeatures c;
        c.id = i;
        c.count = 1.0 + (i % 3); // only the constant term varies
        cells.cells.push_back(c);
    }
    Rng rng(4);
    std::vector<double> cumulative;
    double acc = 0.0;
    for (const auto& c : cells.cells) {
        acc += c.count;
        cumulative.push_back(acc);
    }
    std::vector<SurveyTrip> trips;
    for (int i = 0; i < 5000; ++i) {
        trips.push_back(trip(0, static_cast<std::uint32_t>(rng.discrete_cumulative(cumulative))));
    }
    CHECK(calib::rank_and_select_features(trips, cells).empty());
}

TEST_CASE("deterrence: digitized likelihood equals the exact one at bin representatives")
{
    // 30 cells scattered on a strip; the distance callback snaps everything
    // to its bin representative, so digitization is lossless.
    CellTable cells;
    geo::Projection proj(LonLat{10.0, 50.0});
    Rng rng(8);
    for (std::uint32_t i = 0; i < 30; ++i) {
        calib::CellFeatures c;
        c.id = i;
        c.count = 1.0 + (i % 4);
        c.features[kPoiShops] = (i % 5 == 0) ? 1.0 : 0.0;
        c.coordinates = proj.unproject(geo::XY{i * 613.0, (i % 7) * 41.0});
        cells.cells.push_back(c);
    }
    const auto raw = calib::beeline_distances(cells);
    const calib::DistanceFn snapped = [&](std::uint32_t a, std::uint32_t b) {
        if (a == b) {
            return 25.0; // bin-0 representative
        }
        return routing::bin_representative_m(routing::digitize_distance(raw(a, b)));
    };

    std::array<double, kFeatureCount> theta{};
    theta[kPoiShops] = 348.44;
    std::vector<SurveyTrip> trips;
    for (int i = 0; i < 500; ++i) {
        trips.push_back(trip(static_cast<std::uint32_t>(rng.index(30)),
                             static_cast<std::uint32_t>(rng.index(30))));
    }

    DeterrenceParams params;
    params.form = DeterrenceForm::L;
    params.theta = {-0.215, -1.414, 0.0};

    const auto binned = calib::bin_attractions(trips, cells, theta, snapped);
    const double reduced = calib::reduced_log_likelihood(params, trips, binned, snapped);
    const double direct = calib::direct_log_likelihood(params, trips, cells, theta, snapped);
    CHECK(reduced == doctest::Approx(direct).epsilon(1e-9));

    // On raw distances the 50 m binning stays within 0.5% relative.
    const auto binned_raw = calib::bin_attractions(trips, cells, theta, raw);
    const double reduced_raw = calib::reduced_log_likelihood(params, trips, binned_raw, raw);
    const double direct_raw = calib::direct_log_likelihood(params, trips, cells, theta, raw);
    CHECK(std::abs(reduced_raw - direct_raw) / std::abs(direct_raw) < 0.005);
}

TEST_CASE("fit_deterrence: recovers the shipped shopping form from sampled trips")
{
    const auto city = calib::make_synthetic_city();
    std::array<double, kFeatureCount> theta{};
    theta[kPoiShops] = 348.44;
    DeterrenceParams truth;
    truth.form = DeterrenceForm::L;
    truth.theta = {-0.215, -1.414, 0.0};

    Rng rng(99);
    const auto distance = calib::beeline_distances(city);
    const auto trips =
        sample_gravity_trips(city, theta, truth, Purpose::shopping, 100000, distance, rng);
    const auto fit = calib::fit_deterrence(trips, city, theta, DeterrenceForm::L, distance);
    CHECK(fit.params.theta[0] == doctest::Approx(truth.theta[0]).epsilon(0.10));
    CHECK(fit.params.theta[1] == doctest::Approx(truth.theta[1]).epsilon(0.10));
}

TEST_CASE("fit_deterrence: distance-blind data fits a near-zero coefficient")
{
    const auto city = calib::make_synthetic_city();
    std::array<double, kFeatureCount> theta{};
    theta[kPoiShops] = 348.44;

    Rng rng(7);
    const auto trips = sample_marginal_trips(city, theta, Purpose::shopping, 100000, rng);
    const auto distance = calib::beeline_distances(city);
    for (auto form : {DeterrenceForm::E, DeterrenceForm::L}) {
        const auto fit = calib::fit_deterrence(trips, city, theta, form, distance);
        for (std::size_t k = 0; k < deterrence_param_count(form); ++k) {
            CHECK(std::abs(fit.params.theta[k]) < 0.02);
        }
    }
}

TEST_CASE("select_deterrence_form: lognormal truth picks L, KS basics")
{
    const auto city = calib::make_synthetic_city();
    std::array<double, kFeatureCount> theta{};
    theta[kPoiShops] = 348.44;
    DeterrenceParams truth;
    truth.form = DeterrenceForm::L;
    truth.theta = {-0.215, -1.414, 0.0};
    const auto distance = calib::beeline_distances(city);

    int l_wins = 0;
    for (int rep = 0; rep < 5; ++rep) {
        Rng rng(1000 + rep);
        const auto trips =
            sample_gravity_trips(city, theta, truth, Purpose::shopping, 15000, distance, rng);
        const auto selection =
            calib::select_deterrence_form(trips, city, theta, distance, 17 + rep, 40000);
        if (selection.best.params.form == DeterrenceForm::L) {
            ++l_wins;
        }
    }
    CHECK(l_wins >= 4);

    std::vector<double> sample{1.0, 2.0, 5.0, 9.0};
    CHECK(calib::ks_statistic(sample, sample) == 0.0);
    CHECK(calib::ks_statistic({1.0, 2.0}, {100.0, 101.0}) == doctest::Approx(1.0));
}

TEST_CASE("select_deterrence_form: flat distances tie-break to the fewest parameters")
{
    const auto city = calib::make_synthetic_city();
    std::array<double, kFeatureCount> theta{};
    theta[kPoiShops] = 348.44;
    Rng rng(12);
    // Distance-blind destinations: every form fits towards zero and induces
    // the same distribution, so the parsimonious E wins the near-tie.
    const auto trips = sample_marginal_trips(city, theta, Purpose::shopping, 30000, rng);
    const auto distance = calib::beeline_distances(city);
    const auto selection = calib::select_deterrence_form(trips, city, theta, distance, 5, 40000);
    CHECK(selection.best.params.form == DeterrenceForm::E);
}

TEST_CASE("build_chain_tables: frequencies, the sample threshold, and marginals")
{
    Survey survey;
    auto add_days = [&](const sched::Chain& chain, int count, Weekday wd) {
        for (int i = 0; i < count; ++i) {
            calib::SurveyDay day;
            day.person_id = static_cast<std::int64_t>(survey.days.size());
            day.weekday = wd;
            day.chain = chain;
            day.cells.assign(chain.size(), 0);
            day.dwell_hours.assign(chain.size() > 0 ? chain.size() - 1 : 0, 1.0);
            survey.days.push_back(std::move(day));
        }
    };

    SUBCASE("uniform three-chain survey gives exact thirds")
    {
        add_days({A::home}, 100, Weekday::undefined);
        add_days({A::home, A::work, A::home}, 100, Weekday::undefined);
        add_days({A::home, A::shopping, A::home}, 100, Weekday::undefined);
        const auto build = calib::build_chain_tables(survey);
        const auto* dist = build.table.find(sched::FeatureKey{});
        REQUIRE(dist != nullptr);
        CHECK(dist->sample_count == 300);
        REQUIRE(dist->chains.size() == 3);
        for (const auto& [chain, p] : dist->chains) {
            CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
        }
    }

    SUBCASE("a chain with 29 samples is dropped but its mass is remembered")
    {
        add_days({A::home}, 300, Weekday::undefined);
        add_days({A::home, A::work, A::shopping, A::home}, 29, Weekday::undefined);
        const auto build = calib::build_chain_tables(survey);
        const auto* dist = build.table.find(sched::FeatureKey{});
        REQUIRE(dist != nullptr);
        REQUIRE(dist->chains.size() == 1);
        CHECK(dist->chains[0].first == sched::Chain{A::home});

        const auto& marginals = build.length_marginals.at(sched::FeatureKey{}.packed());
        CHECK(marginals.at(1) == doctest::Approx(300.0 / 329.0).epsilon(1e-12));
        CHECK(marginals.at(4) == doctest::Approx(29.0 / 329.0).epsilon(1e-12));
    }

    SUBCASE("length recalibration restores the pre-discard marginals")
    {
        add_days({A::home}, 200, Weekday::undefined);
        add_days({A::home, A::work, A::home}, 150, Weekday::undefined);
        add_days({A::home, A::other, A::home}, 20, Weekday::undefined); // dropped
        const auto build = calib::build_chain_tables(survey);
        const auto* dist = build.table.find(sched::FeatureKey{});
        REQUIRE(dist != nullptr);
        std::map<std::size_t, double> recovered;
        for (const auto& [chain, p] : dist->chains) {
            recovered[chain.size()] += p;
        }
        // Pre-discard: len1 200/370, len3 170/370.
        CHECK(recovered[1] == doctest::Approx(200.0 / 370.0).epsilon(1e-9));
        CHECK(recovered[3] == doctest::Approx(170.0 / 370.0).epsilon(1e-9));
    }

    SUBCASE("weekday-specific tables coexist with the global one")
    {
        add_days({A::home}, 40, Weekday::mon);
        add_days({A::home, A::work, A::home}, 40, Weekday::tue);
        const auto build = calib::build_chain_tables(survey);
        const auto* mon = build.table.find(sched::FeatureKey{SocioFeatures{}, Weekday::mon});
        REQUIRE(mon != nullptr);
        CHECK(mon->sample_count == 40);
        CHECK(mon->chains.size() == 1);
        const auto* global = build.table.find(sched::FeatureKey{});
        REQUIRE(global != nullptr);
        CHECK(global->sample_count == 80);
    }
}

TEST_CASE("fit_dwell_mixtures: BIC-selected mixtures for retained chains only")
{
    Survey survey;
    Rng rng(21);
    const sched::Chain hwh{A::home, A::work, A::home};
    for (int i = 0; i < 400; ++i) {
        calib::SurveyDay day;
        day.person_id = i;
        day.chain = hwh;
        day.cells = {0, 1, 0};
        day.dwell_hours = {7.5 + rng.normal() * 0.8, 8.5 + rng.normal() * 0.9};
        survey.days.push_back(std::move(day));
    }
    for (int i = 0; i < 50; ++i) {
        calib::SurveyDay day;
        day.person_id = 1000 + i;
        day.chain = {A::home};
        day.cells = {0};
        survey.days.push_back(std::move(day));
    }

    const auto build = calib::build_chain_tables(survey);
    const auto mixtures = calib::fit_dwell_mixtures(survey, build.table, 2);

    const auto* m = mixtures.find(sched::FeatureKey{}, hwh);
    REQUIRE(m != nullptr);
    CHECK(m->mixture.dimension() == 2);
    CHECK(m->mixture.components.size() == 1); // single-gaussian data
    CHECK(m->mixture.components[0].mean(0) == doctest::Approx(7.5).epsilon(0.05));

    CHECK(mixtures.find(sched::FeatureKey{}, sched::Chain{A::home}) == nullptr);
}

TEST_CASE("generate_synthetic_survey: trivial cases")
{
    const auto city = calib::make_synthetic_city();
    const auto truth = calib::reference_truth_bundle();
    Rng rng(3);
    CHECK(calib::generate_synthetic_survey(truth, city, 0, rng).days.empty());

    CalibrationBundle single = fixtures::all_home_bundle();
    const auto survey = calib::generate_synthetic_survey(single, city, 50, rng);
    REQUIRE(survey.days.size() == 50);
    for (const auto& day : survey.days) {
        CHECK(day.chain == sched::Chain{A::home});
        CHECK(day.cells.size() == 1);
    }
}

TEST_CASE("calibrate: closed loop on a reduced synthetic survey")
{
    const auto city = calib::make_synthetic_city();
    const auto truth = calib::reference_truth_bundle();
    Rng rng(42);
    const auto survey = calib::generate_synthetic_survey(truth, city, 8000, rng);

    calib::CalibrationOptions options;
    options.threads = 2;
    const auto distance = calib::beeline_distances(city);
    const auto bundle = calib::calibrate(survey, city, distance, options);

    // Re-simulate with the fitted bundle and compare trip distances.
    Rng rng2(43);
    const auto resim = calib::generate_synthetic_survey(bundle, city, 8000, rng2);
    std::vector<double> survey_d, resim_d;
    for (const auto& t : survey.trips()) {
        survey_d.push_back(distance(t.origin_cell, t.dest_cell));
    }
    for (const auto& t : resim.trips()) {
        resim_d.push_back(distance(t.origin_cell, t.dest_cell));
    }
    CHECK(calib::ks_statistic(survey_d, resim_d) < 0.05);
}
