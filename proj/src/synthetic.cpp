#include "mobgen/synthetic.hpp"

#include <cmath>
#include <map>

#include "mobgen/errors.hpp"
#include "mobgen/geo.hpp"

namespace mobgen::calib {

namespace {

constexpr int kGridSide = 32;
constexpr double kCellSpacingM = 500.0;
constexpr LonLat kCityAnchor{10.0, 50.0};

Eigen::MatrixXd matrix2(double a, double b, double c, double d)
{
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

CellTable make_synthetic_city()
{
    const geo::Projection proj(kCityAnchor);
    CellTable table;
    table.cells.reserve(kGridSide * kGridSide);

    for (int row = 0; row < kGridSide; ++row) {
        for (int col = 0; col < kGridSide; ++col) {
            const std::uint32_t id = static_cast<std::uint32_t>(row * kGridSide + col);
            std::uint64_t state = derive_seed(0xC1717ull, id);

            CellFeatures cell;
            cell.id = id;
            const double x = (col - kGridSide / 2) * kCellSpacingM;
            const double y = (row - kGridSide / 2) * kCellSpacingM;
            cell.coordinates = proj.unproject(geo::XY{x, y});
            cell.count = 5.0 + static_cast<double>(splitmix64(state) % 16);

            // Dominant landuse class of the cell.
            const double land_draw = static_cast<double>(splitmix64(state) % 1000) / 1000.0;
            std::size_t area_slot, use_slot;
            if (land_draw < 0.50) {
                area_slot = kAreaResidential;
                use_slot = kUseResidential;
            }
            else if (land_draw < 0.65) {
                area_slot = kAreaCommercial;
                use_slot = kUseCommercial;
            }
            else if (land_draw < 0.75) {
                area_slot = kAreaIndustrial;
                use_slot = kUseIndustrial;
            }
            else {
                area_slot = kAreaOther;
                use_slot = kUseOther;
            }
            const double dominant = std::ceil(0.8 * cell.count);
            const double rest = cell.count - dominant;
            cell.features[area_slot] = dominant * (80.0 + static_cast<double>(splitmix64(state) % 120));
            cell.features[use_slot] = dominant;
            if (rest > 0.0) {
                cell.features[kAreaOther] += rest * (60.0 + static_cast<double>(splitmix64(state) % 80));
                cell.features[kUseOther] += rest;
            }

            // POI counts, drawn independently of each other and the landuse.
            if (splitmix64(state) % 100 < 20) {
                cell.features[kPoiShops] = 1.0 + static_cast<double>(splitmix64(state) % 5);
            }
            if (splitmix64(state) % 100 < 15) {
                cell.features[kPoiOffices] = 1.0 + static_cast<double>(splitmix64(state) % 3);
            }
            if (splitmix64(state) % 100 < 4) {
                cell.features[kPoiSchools] = 1.0;
            }
            if (splitmix64(state) % 100 < 1) {
                cell.features[kPoiUniversities] = 1.0;
            }
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

CalibrationBundle reference_truth_bundle()
{
    CalibrationBundle bundle;
    bundle.attraction = AttractionCoeffs::defaults();
    bundle.deterrence = DeterrenceSet::defaults();

    using A = ActivityType;
    sched::ChainDistribution dist;
    dist.sample_count = 100000;
    dist.chains = {
        {{A::home}, 0.28},
        {{A::home, A::work, A::home}, 0.22},
        {{A::home, A::shopping, A::home}, 0.14},
        {{A::home, A::other, A::home}, 0.10},
        {{A::home, A::school, A::home}, 0.08},
        {{A::home, A::work, A::shopping, A::home}, 0.07},
        {{A::home, A::work, A::other, A::home}, 0.05},
        {{A::home, A::shopping, A::other, A::home}, 0.04},
        {{A::home, A::work, A::home, A::shopping, A::home}, 0.02},
    };
    sched::FeatureKey global; // everything undefined
    bundle.chains.insert(global, dist);

    auto insert_mixture = [&](const sched::Chain& chain, std::vector<gmm::Component> comps) {
        sched::DwellMixture m;
        m.mixture.components = std::move(comps);
        bundle.mixtures.insert(global, chain, std::move(m));
    };

    auto single = [](std::vector<double> mean, Eigen::MatrixXd cov) {
        gmm::Component c;
        c.weight = 1.0;
        c.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        c.covariance = std::move(cov);
        return c;
    };

    insert_mixture({A::home, A::work, A::home},
                   {single({7.5, 8.5}, matrix2(1.0, 0.2, 0.2, 1.5))});
    {
        // Two shopping habits: a quick morning run and a longer afternoon one.
        gmm::Component early = single({9.5, 0.9}, matrix2(1.2, 0.05, 0.05, 0.15));
        early.weight = 0.6;
        gmm::Component late = single({13.5, 1.8}, matrix2(1.5, 0.1, 0.1, 0.4));
        late.weight = 0.4;
        insert_mixture({A::home, A::shopping, A::home}, {early, late});
    }
    insert_mixture({A::home, A::other, A::home},
                   {single({9.8, 2.4}, matrix2(2.0, 0.15, 0.15, 1.0))});
    insert_mixture({A::home, A::school, A::home},
                   {single({7.8, 6.4}, matrix2(0.5, 0.1, 0.1, 1.0))});

    auto diag3 = [](double a, double b, double c) {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
        m.diagonal() << a, b, c;
        return m;
    };
    insert_mixture({A::home, A::work, A::shopping, A::home},
                   {single({7.4, 8.2, 1.0}, diag3(0.8, 1.2, 0.2))});
    insert_mixture({A::home, A::work, A::other, A::home},
                   {single({7.4, 8.3, 1.8}, diag3(0.8, 1.2, 0.5))});
    insert_mixture({A::home, A::shopping, A::other, A::home},
                   {single({9.2, 1.4, 2.1}, diag3(1.5, 0.3, 0.6))});
    {
        Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
        cov.diagonal() << 0.8, 1.0, 0.4, 0.3;
        gmm::Component c;
        c.weight = 1.0;
        c.mean = Eigen::VectorXd(4);
        c.mean << 7.3, 7.9, 1.6, 1.2;
        c.covariance = std::move(cov);
        insert_mixture({A::home, A::work, A::home, A::shopping, A::home}, {c});
    }
    return bundle;
}

Survey generate_synthetic_survey(const CalibrationBundle& truth, const CellTable& city,
                                 std::size_t person_days, Rng& rng,
                                 const SurveyGenOptions& options)
{
    const std::size_t n_cells = city.cells.size();
    if (n_cells == 0) {
        throw ArgumentError("synthetic survey needs a non-empty city");
    }

    // Cell attractions per purpose under the truth parameters.
    std::array<std::vector<double>, kActivityCount> attraction_of;
    for (auto purpose : kAllActivities) {
        auto& vec = attraction_of[static_cast<std::size_t>(purpose)];
        vec.resize(n_cells);
        const auto theta = truth.attraction.for_purpose(purpose);
        for (std::size_t j = 0; j < n_cells; ++j) {
            double a = city.cells[j].count;
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                a += theta[k] * city.cells[j].features[k];
            }
            vec[j] = a;
        }
    }

    std::vector<double> home_cumulative(n_cells);
    {
        double acc = 0.0;
        const auto& a = attraction_of[static_cast<std::size_t>(Purpose::home)];
        for (std::size_t j = 0; j < n_cells; ++j) {
            acc += a[j];
            home_cumulative[j] = acc;
        }
    }

    // Cached cumulative MNL weights per (purpose, origin).
    std::map<std::pair<int, std::uint32_t>, std::vector<double>> cumulative_cache;
    auto choose_cell = [&](Purpose purpose, std::uint32_t origin) {
        const auto key = std::make_pair(static_cast<int>(purpose), origin);
        auto it = cumulative_cache.find(key);
        if (it == cumulative_cache.end()) {
            const auto& attr = attraction_of[static_cast<std::size_t>(purpose)];
            const DeterrenceParams& det = truth.deterrence.for_purpose(purpose);
            std::vector<double> log_w(n_cells, -std::numeric_limits<double>::infinity());
            double max_lw = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n_cells; ++j) {
                if (!(attr[j] > 0.0)) {
                    continue;
                }
                const double d_km =
                    geo::haversine_m(city.cells[origin].coordinates, city.cells[j].coordinates) /
                    1000.0;
                log_w[j] = std::log(attr[j]) + log_deterrence(d_km, det);
                max_lw = std::max(max_lw, log_w[j]);
            }
            if (!std::isfinite(max_lw)) {
                throw DegenerateChoiceError("all synthetic destination weights are zero");
            }
            std::vector<double> cumulative(n_cells);
            double acc = 0.0;
            for (std::size_t j = 0; j < n_cells; ++j) {
                acc += std::isfinite(log_w[j]) ? std::exp(log_w[j] - max_lw) : 0.0;
                cumulative[j] = acc;
            }
            it = cumulative_cache.emplace(key, std::move(cumulative)).first;
        }
        return static_cast<std::uint32_t>(rng.discrete_cumulative(it->second));
    };

    sched::ScheduleModel model{&truth.chains, &truth.mixtures};
    Survey survey;
    survey.days.reserve(person_days);
    for (std::size_t person = 0; person < person_days; ++person) {
        SurveyDay day;
        day.person_id = static_cast<std::int64_t>(person);
        day.weekday = options.sample_weekdays ? static_cast<Weekday>(rng.index(7)) : Weekday::undefined;

        const std::uint32_t home = static_cast<std::uint32_t>(rng.discrete_cumulative(home_cumulative));
        day.chain = sched::sample_chain_with_fallback(truth.chains, day.features, day.weekday,
                                                      ActivityType::home, rng);
        if (day.chain.size() > 1) {
            const sched::DwellMixture* mixture =
                truth.mixtures.find_with_fallback(day.features, day.weekday, day.chain);
            if (mixture == nullptr) {
                throw ModelLoadError("truth bundle lacks a dwell mixture for chain '" +
                                     chain_to_string(day.chain) + "'");
            }
            const auto minutes = sched::sample_dwell_times(*mixture, day.chain.size(), rng);
            day.dwell_hours.reserve(minutes.size());
            for (double m : minutes) {
                day.dwell_hours.push_back(m / 60.0);
            }
        }

        day.cells.reserve(day.chain.size());
        std::uint32_t current = home;
        std::optional<std::uint32_t> work, school;
        day.cells.push_back(home);
        for (std::size_t i = 1; i < day.chain.size(); ++i) {
            std::uint32_t next = current;
            switch (day.chain[i]) {
            case ActivityType::home:
                next = options.home_returns ? home : choose_cell(Purpose::home, current);
                break;
            case ActivityType::work:
                if (!work) {
                    work = choose_cell(Purpose::work, home);
                }
                next = *work;
                break;
            case ActivityType::school:
                if (!school) {
                    school = choose_cell(Purpose::school, home);
                }
                next = *school;
                break;
            case ActivityType::shopping:
            case ActivityType::other:
                next = choose_cell(day.chain[i], current);
                break;
            }
            day.cells.push_back(next);
            current = next;
        }
        survey.days.push_back(std::move(day));
    }
    return survey;
}

} // namespace mobgen::calib
