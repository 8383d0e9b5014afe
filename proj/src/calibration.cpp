#include "mobgen/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "mobgen/errors.hpp"
#include "mobgen/optim.hpp"
#include "mobgen/rng.hpp"
#include "mobgen/util.hpp"

namespace mobgen::calib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double cell_attraction(const CellFeatures& cell, const std::array<double, kFeatureCount>& theta)
{
    double a = cell.count;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        a += theta[k] * cell.features[k];
    }
    return a;
}

} // namespace

void CellTable::save(const std::filesystem::path& path) const
{
    nlohmann::json doc;
    doc["schema"] = "mobgen-cells-v1";
    auto& arr = doc["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json jc;
        jc["id"] = c.id;
        jc["lon"] = c.coordinates.lon;
        jc["lat"] = c.coordinates.lat;
        jc["count"] = c.count;
        jc["features"] = std::vector<double>(c.features.begin(), c.features.end());
        arr.push_back(std::move(jc));
    }
    util::write_file(path, doc.dump());
}

CellTable CellTable::load(const std::filesystem::path& path)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(util::read_file(path));
    }
    catch (const nlohmann::json::exception& e) {
        throw SchemaError("bad cell table " + path.string() + ": " + e.what());
    }
    if (doc.value("schema", "") != "mobgen-cells-v1") {
        throw SchemaError("unsupported cell table schema in " + path.string());
    }
    CellTable table;
    try {
        for (const auto& jc : doc.at("cells")) {
            CellFeatures c;
            c.id = jc.at("id").get<std::uint32_t>();
            c.coordinates = LonLat{jc.at("lon").get<double>(), jc.at("lat").get<double>()};
            c.count = jc.at("count").get<double>();
            const auto feats = jc.at("features").get<std::vector<double>>();
            if (feats.size() != kFeatureCount) {
                throw SchemaError("cell feature vector must have " +
                                  std::to_string(kFeatureCount) + " entries");
            }
            std::copy(feats.begin(), feats.end(), c.features.begin());
            table.cells.push_back(std::move(c));
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw SchemaError("bad cell table " + path.string() + ": " + e.what());
    }
    for (std::size_t i = 0; i < table.cells.size(); ++i) {
        if (table.cells[i].id != i) {
            throw SchemaError("cell ids must be dense and ordered in " + path.string());
        }
    }
    return table;
}

DistanceFn beeline_distances(const CellTable& cells)
{
    std::vector<LonLat> coords;
    coords.reserve(cells.cells.size());
    for (const auto& c : cells.cells) {
        coords.push_back(c.coordinates);
    }
    return [coords = std::move(coords)](std::uint32_t a, std::uint32_t b) {
        return geo::haversine_m(coords[a], coords[b]);
    };
}

std::vector<SurveyTrip> Survey::trips() const
{
    std::vector<SurveyTrip> out;
    for (const auto& day : days) {
        for (std::size_t i = 0; i + 1 < day.chain.size(); ++i) {
            out.push_back(SurveyTrip{day.cells[i], day.cells[i + 1], day.chain[i + 1]});
        }
    }
    return out;
}

std::vector<SurveyTrip> Survey::trips(Purpose purpose) const
{
    std::vector<SurveyTrip> out;
    for (const auto& day : days) {
        for (std::size_t i = 0; i + 1 < day.chain.size(); ++i) {
            if (day.chain[i + 1] == purpose) {
                out.push_back(SurveyTrip{day.cells[i], day.cells[i + 1], day.chain[i + 1]});
            }
        }
    }
    return out;
}

void Survey::save_csv(const std::filesystem::path& path) const
{
    std::ostringstream out;
    out.precision(12);
    out << "person_id,age,hom_group,mob_group,weekday,trip_index,purpose,origin_cell,dest_cell,"
           "start_min,end_min\n";
    for (const auto& day : days) {
        const auto base = std::to_string(day.person_id) + "," + std::string(to_string(day.features.age)) +
                          "," + std::string(to_string(day.features.homogenous_group)) + "," +
                          std::string(to_string(day.features.mobility_group)) + "," +
                          std::string(to_string(day.weekday)) + ",";
        if (day.chain.size() == 1) {
            // Stationary day: marker row, excluded from destination fits.
            out << base << "-1," << to_string(day.chain[0]) << "," << day.cells[0] << ","
                << day.cells[0] << ",0,0\n";
            continue;
        }
        double clock_min = 0.0;
        for (std::size_t t = 0; t + 1 < day.chain.size(); ++t) {
            clock_min += day.dwell_hours[t] * 60.0;
            out << base << t << "," << to_string(day.chain[t + 1]) << "," << day.cells[t] << ","
                << day.cells[t + 1] << "," << clock_min << "," << clock_min << "\n";
        }
    }
    util::write_file(path, out.str());
}

Survey Survey::load_csv(const std::filesystem::path& path)
{
    const auto rows = util::read_csv(path);
    if (rows.empty()) {
        throw SchemaError("empty survey: " + path.string());
    }
    static const std::vector<std::string> kHeader = {
        "person_id", "age",     "hom_group",   "mob_group", "weekday",   "trip_index",
        "purpose",   "origin_cell", "dest_cell", "start_min", "end_min"};
    const auto& header = rows.front();
    for (const auto& column : kHeader) {
        if (std::find(header.begin(), header.end(), column) == header.end()) {
            throw SchemaError("survey is missing column '" + column + "'");
        }
    }
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col[header[i]] = i;
    }

    struct Row {
        int trip_index;
        Purpose purpose;
        std::uint32_t origin, dest;
        double start_min, end_min;
    };
    // person rows in file order
    std::vector<std::pair<std::int64_t, SurveyDay>> persons;
    std::map<std::int64_t, std::size_t> person_slot;
    std::map<std::int64_t, std::vector<Row>> trips_of;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        if (fields.size() < header.size()) {
            throw SchemaError("survey row " + std::to_string(r + 1) + " has too few fields");
        }
        const std::int64_t pid = std::stoll(fields[col["person_id"]]);
        if (!person_slot.count(pid)) {
            SurveyDay day;
            day.person_id = pid;
            day.features.age = age_from_string(fields[col["age"]]);
            day.features.homogenous_group = homogenous_from_string(fields[col["hom_group"]]);
            day.features.mobility_group = mobility_from_string(fields[col["mob_group"]]);
            day.weekday = weekday_from_string(fields[col["weekday"]]);
            person_slot[pid] = persons.size();
            persons.emplace_back(pid, std::move(day));
        }
        Row row;
        row.trip_index = std::stoi(fields[col["trip_index"]]);
        row.purpose = activity_from_string(fields[col["purpose"]]);
        row.origin = static_cast<std::uint32_t>(std::stoul(fields[col["origin_cell"]]));
        row.dest = static_cast<std::uint32_t>(std::stoul(fields[col["dest_cell"]]));
        row.start_min = std::stod(fields[col["start_min"]]);
        row.end_min = std::stod(fields[col["end_min"]]);
        trips_of[pid].push_back(row);
    }

    Survey survey;
    for (auto& [pid, day] : persons) {
        auto& rows_of_person = trips_of[pid];
        std::sort(rows_of_person.begin(), rows_of_person.end(),
                  [](const Row& a, const Row& b) { return a.trip_index < b.trip_index; });
        if (rows_of_person.size() == 1 && rows_of_person[0].trip_index < 0) {
            day.chain = {rows_of_person[0].purpose};
            day.cells = {rows_of_person[0].origin};
            survey.days.push_back(std::move(day));
            continue;
        }
        // Trip day: the surveyed day starts at home.
        day.chain = {ActivityType::home};
        day.cells = {rows_of_person[0].origin};
        double prev_end = 0.0;
        for (const auto& row : rows_of_person) {
            if (row.trip_index < 0) {
                throw SchemaError("marker row mixed with trips for person " + std::to_string(pid));
            }
            day.chain.push_back(row.purpose);
            day.cells.push_back(row.dest);
            day.dwell_hours.push_back((row.start_min - prev_end) / 60.0);
            prev_end = row.end_min;
        }
        survey.days.push_back(std::move(day));
    }
    if (survey.days.empty()) {
        throw SchemaError("empty survey: " + path.string());
    }
    return survey;
}

// --- attraction -------------------------------------------------------------

AttractionFit fit_attraction(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                             const std::set<std::size_t>& active)
{
    if (trips.empty()) {
        throw FitError("attraction fit without trips");
    }
    const std::size_t n_cells = cells.cells.size();
    std::vector<double> dest_count(n_cells, 0.0);
    for (const auto& t : trips) {
        if (t.dest_cell >= n_cells) {
            throw SchemaError("trip references unknown cell " + std::to_string(t.dest_cell));
        }
        dest_count[t.dest_cell] += 1.0;
    }
    const double n_trips = static_cast<double>(trips.size());

    // Raw feature magnitudes differ by orders of magnitude (areas vs POI
    // counts); the fit runs on unit-scaled columns.
    FeatureVector scale{};
    for (const auto& c : cells.cells) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            scale[k] = std::max(scale[k], c.features[k]);
        }
    }
    for (double& s : scale) {
        if (!(s > 0.0)) {
            s = 1.0;
        }
    }

    // Constant piece: per-feature totals over the whole choice set.
    FeatureVector feature_total{};
    for (const auto& c : cells.cells) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            feature_total[k] += c.features[k] / scale[k];
        }
    }

    auto objective = [&](const std::vector<double>& theta, std::vector<double>& grad,
                         std::vector<double>& hess) {
        double sum_log = 0.0;
        FeatureVector grad_data{};
        std::array<double, kFeatureCount * kFeatureCount> curvature{};
        double s = 0.0;
        FeatureVector scaled{};
        for (std::size_t j = 0; j < n_cells; ++j) {
            const auto& c = cells.cells[j];
            double a = c.count;
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                scaled[k] = c.features[k] / scale[k];
                a += theta[k] * scaled[k];
            }
            s += a;
            if (dest_count[j] > 0.0) {
                if (!(a > 0.0)) {
                    throw FitError("observed destination cell " + std::to_string(j) +
                                   " has zero attraction");
                }
                sum_log += dest_count[j] * std::log(a);
                const double inv = 1.0 / a;
                for (std::size_t k = 0; k < kFeatureCount; ++k) {
                    if (scaled[k] == 0.0) {
                        continue;
                    }
                    grad_data[k] += dest_count[j] * scaled[k] * inv;
                    const double wk = dest_count[j] * scaled[k] * inv * inv;
                    for (std::size_t l = 0; l < kFeatureCount; ++l) {
                        curvature[k * kFeatureCount + l] += wk * scaled[l];
                    }
                }
            }
        }
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            grad[k] = -(grad_data[k] - n_trips * feature_total[k] / s);
            for (std::size_t l = 0; l < kFeatureCount; ++l) {
                hess[k * kFeatureCount + l] =
                    curvature[k * kFeatureCount + l] -
                    n_trips * feature_total[k] * feature_total[l] / (s * s);
            }
        }
        return -(sum_log - n_trips * std::log(s));
    };

    std::vector<double> x0(kFeatureCount, 0.0);
    std::vector<double> lower(kFeatureCount, 0.0);
    std::vector<double> upper(kFeatureCount, kInf);
    if (!active.empty()) {
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            if (!active.count(k)) {
                upper[k] = 0.0; // frozen at zero
            }
        }
    }

    optim::Options opts;
    opts.max_iterations = 400;
    opts.gradient_tolerance = 1e-8 * n_trips; // gradient scales with the trip count
    const auto result = optim::minimize_box_newton(objective, x0, lower, upper, opts);
    if (!result.converged) {
        throw FitError("attraction fit did not converge after " +
                       std::to_string(result.iterations) + " iterations (objective " +
                       std::to_string(result.value) + ")");
    }
    AttractionFit fit;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        fit.theta[k] = result.x[k] / scale[k];
    }
    fit.log_likelihood = -result.value;
    fit.iterations = result.iterations;
    return fit;
}

std::set<std::size_t> rank_and_select_features(const std::vector<SurveyTrip>& trips,
                                               const CellTable& cells, double epsilon)
{
    std::set<std::size_t> all;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        all.insert(k);
    }
    const double n_trips = static_cast<double>(trips.size());
    const double full_ll = fit_attraction(trips, cells, all).log_likelihood;

    // Leave-one-out: importance = damage done by removing the feature.
    std::vector<std::pair<double, std::size_t>> ranking;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        std::set<std::size_t> without = all;
        without.erase(k);
        const double ll = fit_attraction(trips, cells, without).log_likelihood;
        ranking.emplace_back(full_ll - ll, k);
    }
    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    // Forward pass over ranked prefixes; stop at the first insufficient gain.
    std::set<std::size_t> chosen;
    double best_ll = fit_attraction(trips, cells, {kFeatureCount}).log_likelihood; // constant model
    for (const auto& [importance, k] : ranking) {
        (void)importance;
        std::set<std::size_t> candidate = chosen;
        candidate.insert(k);
        const double ll = fit_attraction(trips, cells, candidate).log_likelihood;
        if ((ll - best_ll) / n_trips > epsilon) {
            chosen = std::move(candidate);
            best_ll = ll;
        }
        else {
            break;
        }
    }
    return chosen;
}

// --- deterrence --------------------------------------------------------------

BinnedAttraction bin_attractions(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                                 const std::array<double, kFeatureCount>& theta,
                                 const DistanceFn& distance, double bin_width_m)
{
    BinnedAttraction binned;
    binned.bin_width_m = bin_width_m;

    std::map<std::uint32_t, double> origin_counts;
    for (const auto& t : trips) {
        origin_counts[t.origin_cell] += 1.0;
    }
    std::vector<double> attraction_of(cells.cells.size());
    for (std::size_t j = 0; j < cells.cells.size(); ++j) {
        attraction_of[j] = cell_attraction(cells.cells[j], theta);
    }

    for (const auto& [origin, count] : origin_counts) {
        std::vector<double> mass;
        for (std::size_t j = 0; j < cells.cells.size(); ++j) {
            if (!(attraction_of[j] > 0.0)) {
                continue;
            }
            const std::size_t bin = routing::digitize_distance(distance(origin, static_cast<std::uint32_t>(j)),
                                                               bin_width_m);
            if (bin >= mass.size()) {
                mass.resize(bin + 1, 0.0);
            }
            mass[bin] += attraction_of[j];
        }
        binned.bin_count = std::max(binned.bin_count, mass.size());
        binned.origins.push_back(origin);
        binned.trip_counts.push_back(count);
        binned.mass.push_back(std::move(mass));
    }
    return binned;
}

namespace {

/// ln sum_bin mass_bin * exp(theta . G(bin)); optionally the first and
/// second moments of G under that weighting.
double origin_log_partition(const std::vector<double>& mass, const DeterrenceParams& params,
                            double bin_width_m, std::array<double, 3>* expected_features,
                            std::array<double, 9>* second_moments = nullptr)
{
    double max_term = -kInf;
    std::vector<double> terms(mass.size(), -kInf);
    for (std::size_t bin = 0; bin < mass.size(); ++bin) {
        if (!(mass[bin] > 0.0)) {
            continue;
        }
        const double rep_km = routing::bin_representative_m(bin, bin_width_m) / 1000.0;
        terms[bin] = log_deterrence(rep_km, params) + std::log(mass[bin]);
        max_term = std::max(max_term, terms[bin]);
    }
    if (!std::isfinite(max_term)) {
        return -kInf;
    }
    double sum = 0.0;
    std::array<double, 3> weighted{};
    std::array<double, 9> weighted2{};
    for (std::size_t bin = 0; bin < mass.size(); ++bin) {
        if (!std::isfinite(terms[bin])) {
            continue;
        }
        const double w = std::exp(terms[bin] - max_term);
        sum += w;
        if (expected_features != nullptr) {
            const double rep_km = routing::bin_representative_m(bin, bin_width_m) / 1000.0;
            const auto g = deterrence_features(rep_km, params.form);
            for (std::size_t k = 0; k < 3; ++k) {
                weighted[k] += w * g[k];
                if (second_moments != nullptr) {
                    for (std::size_t l = 0; l < 3; ++l) {
                        weighted2[k * 3 + l] += w * g[k] * g[l];
                    }
                }
            }
        }
    }
    if (expected_features != nullptr) {
        for (std::size_t k = 0; k < 3; ++k) {
            (*expected_features)[k] = weighted[k] / sum;
        }
    }
    if (second_moments != nullptr) {
        for (std::size_t k = 0; k < 9; ++k) {
            (*second_moments)[k] = weighted2[k] / sum;
        }
    }
    return max_term + std::log(sum);
}

} // namespace

double reduced_log_likelihood(const DeterrenceParams& params, const std::vector<SurveyTrip>& trips,
                              const BinnedAttraction& binned, const DistanceFn& distance)
{
    double ll = 0.0;
    for (const auto& t : trips) {
        const std::size_t bin =
            routing::digitize_distance(distance(t.origin_cell, t.dest_cell), binned.bin_width_m);
        const double rep_km = routing::bin_representative_m(bin, binned.bin_width_m) / 1000.0;
        ll += log_deterrence(rep_km, params);
    }
    for (std::size_t o = 0; o < binned.origins.size(); ++o) {
        ll -= binned.trip_counts[o] *
              origin_log_partition(binned.mass[o], params, binned.bin_width_m, nullptr);
    }
    return ll;
}

double direct_log_likelihood(const DeterrenceParams& params, const std::vector<SurveyTrip>& trips,
                             const CellTable& cells,
                             const std::array<double, kFeatureCount>& theta,
                             const DistanceFn& distance)
{
    std::map<std::uint32_t, double> origin_counts;
    double ll = 0.0;
    for (const auto& t : trips) {
        ll += log_deterrence(distance(t.origin_cell, t.dest_cell) / 1000.0, params);
        origin_counts[t.origin_cell] += 1.0;
    }
    for (const auto& [origin, count] : origin_counts) {
        double max_term = -kInf;
        std::vector<double> terms(cells.cells.size(), -kInf);
        for (std::size_t j = 0; j < cells.cells.size(); ++j) {
            const double a = cell_attraction(cells.cells[j], theta);
            if (!(a > 0.0)) {
                continue;
            }
            terms[j] = std::log(a) +
                       log_deterrence(distance(origin, static_cast<std::uint32_t>(j)) / 1000.0, params);
            max_term = std::max(max_term, terms[j]);
        }
        double sum = 0.0;
        for (double term : terms) {
            if (std::isfinite(term)) {
                sum += std::exp(term - max_term);
            }
        }
        ll -= count * (max_term + std::log(sum));
    }
    return ll;
}

DeterrenceFit fit_deterrence(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                             const std::array<double, kFeatureCount>& theta, DeterrenceForm form,
                             const DistanceFn& distance, double bin_width_m)
{
    if (trips.empty()) {
        throw FitError("deterrence fit without trips");
    }
    const BinnedAttraction binned = bin_attractions(trips, cells, theta, distance, bin_width_m);

    // Per-trip linear features at the bin representative.
    const std::size_t n_params = deterrence_param_count(form);
    std::vector<std::array<double, 3>> trip_features;
    trip_features.reserve(trips.size());
    for (const auto& t : trips) {
        const std::size_t bin =
            routing::digitize_distance(distance(t.origin_cell, t.dest_cell), bin_width_m);
        const double rep_km = routing::bin_representative_m(bin, bin_width_m) / 1000.0;
        trip_features.push_back(deterrence_features(rep_km, form));
    }
    std::array<double, 3> trip_feature_sum{};
    for (const auto& g : trip_features) {
        for (std::size_t k = 0; k < 3; ++k) {
            trip_feature_sum[k] += g[k];
        }
    }

    auto objective = [&](const std::vector<double>& x, std::vector<double>& grad,
                         std::vector<double>& hess) {
        DeterrenceParams params;
        params.form = form;
        for (std::size_t k = 0; k < n_params; ++k) {
            params.theta[k] = x[k];
        }
        double ll = 0.0;
        std::array<double, 3> grad_ll = trip_feature_sum;
        std::array<double, 9> curvature{}; // of -LL: sum of per-origin covariances
        for (std::size_t k = 0; k < 3; ++k) {
            ll += params.theta[k] * trip_feature_sum[k];
        }
        for (std::size_t o = 0; o < binned.origins.size(); ++o) {
            std::array<double, 3> expected{};
            std::array<double, 9> second{};
            const double log_z =
                origin_log_partition(binned.mass[o], params, bin_width_m, &expected, &second);
            ll -= binned.trip_counts[o] * log_z;
            for (std::size_t k = 0; k < 3; ++k) {
                grad_ll[k] -= binned.trip_counts[o] * expected[k];
                for (std::size_t l = 0; l < 3; ++l) {
                    curvature[k * 3 + l] +=
                        binned.trip_counts[o] * (second[k * 3 + l] - expected[k] * expected[l]);
                }
            }
        }
        for (std::size_t k = 0; k < n_params; ++k) {
            grad[k] = -grad_ll[k];
            for (std::size_t l = 0; l < n_params; ++l) {
                hess[k * n_params + l] = curvature[k * 3 + l];
            }
        }
        return -ll;
    };

    // Stated initialization; unused trailing parameters stay absent.
    std::vector<double> x0;
    const std::array<double, 3> init{-0.1, -1.0, 0.0};
    for (std::size_t k = 0; k < n_params; ++k) {
        x0.push_back(init[k]);
    }
    std::vector<double> lower(n_params, -kInf);
    std::vector<double> upper(n_params, kInf);

    optim::Options opts;
    opts.max_iterations = 200;
    opts.gradient_tolerance = 1e-8 * static_cast<double>(trips.size());
    const auto result = optim::minimize_box_newton(objective, x0, lower, upper, opts);
    if (!result.converged) {
        throw FitError("deterrence fit (" + std::string(to_string(form)) +
                       ") did not converge after " + std::to_string(result.iterations) +
                       " iterations");
    }

    DeterrenceFit fit;
    fit.params.form = form;
    for (std::size_t k = 0; k < n_params; ++k) {
        fit.params.theta[k] = result.x[k];
    }
    fit.log_likelihood = -result.value;
    fit.iterations = result.iterations;

    // Probabilities must not rise again at long range: when the fitted form
    // has an interior minimum within the observed distances, zero out
    // everything beyond it.
    const std::size_t bins = binned.bin_count;
    if (bins > 2) {
        std::size_t argmin = 0;
        double minval = kInf;
        for (std::size_t bin = 0; bin < bins; ++bin) {
            const double rep_km = routing::bin_representative_m(bin, bin_width_m) / 1000.0;
            const double v = log_deterrence(rep_km, fit.params);
            if (v < minval) {
                minval = v;
                argmin = bin;
            }
        }
        if (argmin + 1 < bins) {
            const double last_km = routing::bin_representative_m(bins - 1, bin_width_m) / 1000.0;
            if (log_deterrence(last_km, fit.params) > minval + 1e-9) {
                fit.params.cutoff_km = routing::bin_representative_m(argmin, bin_width_m) / 1000.0;
            }
        }
    }
    return fit;
}

double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) {
        throw ArgumentError("KS statistic needs non-empty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t ia = 0, ib = 0;
    double ks = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) {
            ++ia;
        }
        while (ib < b.size() && b[ib] <= x) {
            ++ib;
        }
        ks = std::max(ks, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return ks;
}

FormSelection select_deterrence_form(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                                     const std::array<double, kFeatureCount>& theta,
                                     const DistanceFn& distance, std::uint64_t seed,
                                     std::size_t simulated_trips, double tie_epsilon)
{
    std::vector<double> survey_distances;
    survey_distances.reserve(trips.size());
    for (const auto& t : trips) {
        survey_distances.push_back(distance(t.origin_cell, t.dest_cell));
    }

    std::vector<double> attraction_of(cells.cells.size());
    for (std::size_t j = 0; j < cells.cells.size(); ++j) {
        attraction_of[j] = cell_attraction(cells.cells[j], theta);
    }

    FormSelection selection;
    std::map<DeterrenceForm, DeterrenceFit> fits;
    for (auto form : {DeterrenceForm::E, DeterrenceForm::PE, DeterrenceForm::L, DeterrenceForm::LE}) {
        fits[form] = fit_deterrence(trips, cells, theta, form, distance);

        // Simulated trip distances under the fitted form, origins drawn from
        // the survey's empirical origin distribution.
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(form)));
        std::map<std::uint32_t, std::vector<double>> cumulative_of;
        std::map<std::uint32_t, std::vector<std::uint32_t>> targets_of;
        std::vector<double> sim;
        sim.reserve(simulated_trips);
        for (std::size_t i = 0; i < simulated_trips; ++i) {
            const std::uint32_t origin = trips[i % trips.size()].origin_cell;
            auto it = cumulative_of.find(origin);
            if (it == cumulative_of.end()) {
                std::vector<double> weights;
                std::vector<std::uint32_t> targets;
                double max_lw = -kInf;
                std::vector<double> log_w;
                for (std::size_t j = 0; j < cells.cells.size(); ++j) {
                    if (!(attraction_of[j] > 0.0)) {
                        continue;
                    }
                    const double lw =
                        std::log(attraction_of[j]) +
                        log_deterrence(distance(origin, static_cast<std::uint32_t>(j)) / 1000.0,
                                       fits[form].params);
                    if (std::isfinite(lw)) {
                        log_w.push_back(lw);
                        targets.push_back(static_cast<std::uint32_t>(j));
                        max_lw = std::max(max_lw, lw);
                    }
                }
                double acc = 0.0;
                for (double lw : log_w) {
                    acc += std::exp(lw - max_lw);
                    weights.push_back(acc);
                }
                it = cumulative_of.emplace(origin, std::move(weights)).first;
                targets_of.emplace(origin, std::move(targets));
            }
            const auto& cumulative = it->second;
            if (cumulative.empty()) {
                continue;
            }
            const std::size_t pick = rng.discrete_cumulative(cumulative);
            sim.push_back(distance(origin, targets_of[origin][pick]));
        }
        selection.ks_by_form[form] = ks_statistic(sim, survey_distances);
    }

    double best_ks = kInf;
    for (const auto& [form, ks] : selection.ks_by_form) {
        best_ks = std::min(best_ks, ks);
    }
    // Near-ties resolve to the most parsimonious form.
    DeterrenceForm winner = DeterrenceForm::E;
    std::size_t winner_params = std::numeric_limits<std::size_t>::max();
    for (auto form : {DeterrenceForm::E, DeterrenceForm::PE, DeterrenceForm::L, DeterrenceForm::LE}) {
        if (selection.ks_by_form[form] <= best_ks + tie_epsilon &&
            deterrence_param_count(form) < winner_params) {
            winner = form;
            winner_params = deterrence_param_count(form);
        }
    }
    selection.best = fits[winner];
    return selection;
}

// --- chains and dwell times ---------------------------------------------------

namespace {

bool day_matches(const SurveyDay& day, const sched::FeatureKey& key)
{
    const auto& f = key.features;
    if (f.age != AgeGroup::undefined && day.features.age != f.age) {
        return false;
    }
    if (f.homogenous_group != HomogenousGroup::undefined &&
        day.features.homogenous_group != f.homogenous_group) {
        return false;
    }
    if (f.mobility_group != MobilityGroup::undefined &&
        day.features.mobility_group != f.mobility_group) {
        return false;
    }
    if (key.weekday != Weekday::undefined && day.weekday != key.weekday) {
        return false;
    }
    return true;
}

} // namespace

ChainTableBuild build_chain_tables(const Survey& survey)
{
    if (survey.empty()) {
        throw SchemaError("empty survey");
    }
    ChainTableBuild build;

    for (int age = 0; age <= static_cast<int>(AgeGroup::undefined); ++age) {
        for (int hom = 0; hom <= static_cast<int>(HomogenousGroup::undefined); ++hom) {
            for (int mob = 0; mob <= static_cast<int>(MobilityGroup::undefined); ++mob) {
                for (int wd = 0; wd <= static_cast<int>(Weekday::undefined); ++wd) {
                    sched::FeatureKey key;
                    key.features.age = static_cast<AgeGroup>(age);
                    key.features.homogenous_group = static_cast<HomogenousGroup>(hom);
                    key.features.mobility_group = static_cast<MobilityGroup>(mob);
                    key.weekday = static_cast<Weekday>(wd);

                    std::size_t matched = 0;
                    std::map<std::string, std::pair<sched::Chain, std::size_t>> chain_counts;
                    std::map<std::size_t, double> length_counts;
                    for (const auto& day : survey.days) {
                        if (!day_matches(day, key)) {
                            continue;
                        }
                        ++matched;
                        auto& slot = chain_counts[chain_to_string(day.chain)];
                        slot.first = day.chain;
                        slot.second += 1;
                        length_counts[day.chain.size()] += 1.0;
                    }
                    if (matched < sched::kMinSampleCount) {
                        continue;
                    }

                    sched::ChainDistribution dist;
                    dist.sample_count = matched;
                    double surviving = 0.0;
                    for (const auto& [name, entry] : chain_counts) {
                        (void)name;
                        if (entry.second >= sched::kMinSampleCount) {
                            dist.chains.emplace_back(entry.first,
                                                     static_cast<double>(entry.second));
                            surviving += static_cast<double>(entry.second);
                        }
                    }
                    if (dist.chains.empty()) {
                        continue;
                    }
                    for (auto& [chain, p] : dist.chains) {
                        p /= surviving;
                    }

                    std::map<std::size_t, double> marginals;
                    for (const auto& [len, count] : length_counts) {
                        marginals[len] = count / static_cast<double>(matched);
                    }
                    auto recal = sched::recalibrate_chain_lengths(dist, marginals);
                    build.table.insert(key, std::move(recal.distribution));
                    build.length_marginals[key.packed()] = std::move(marginals);
                }
            }
        }
    }
    if (build.table.empty()) {
        throw FitError("no feature combination reaches the minimum sample count");
    }
    return build;
}

sched::MixtureTable fit_dwell_mixtures(const Survey& survey, const sched::ChainTable& chains,
                                       unsigned threads)
{
    struct Job {
        sched::FeatureKey key;
        sched::Chain chain;
        Eigen::MatrixXd samples;
    };
    std::vector<Job> jobs;
    for (const auto& [packed, entry] : chains.entries()) {
        (void)packed;
        const sched::FeatureKey& key = entry.first;
        for (const auto& [chain, p] : entry.second.chains) {
            (void)p;
            if (chain.size() < 2) {
                continue;
            }
            std::vector<const SurveyDay*> matching;
            for (const auto& day : survey.days) {
                if (day.chain == chain && day_matches(day, key)) {
                    matching.push_back(&day);
                }
            }
            if (matching.empty()) {
                continue;
            }
            Job job;
            job.key = key;
            job.chain = chain;
            job.samples.resize(static_cast<Eigen::Index>(matching.size()),
                               static_cast<Eigen::Index>(chain.size() - 1));
            for (std::size_t r = 0; r < matching.size(); ++r) {
                for (std::size_t c = 0; c + 1 < chain.size(); ++c) {
                    job.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        matching[r]->dwell_hours[c];
                }
            }
            jobs.push_back(std::move(job));
        }
    }

    std::vector<sched::DwellMixture> fitted(jobs.size());
    util::parallel_for(jobs.size(), threads, [&](std::size_t i) {
        auto selection = gmm::fit_with_bic(jobs[i].samples);
        fitted[i].mixture = std::move(selection.mixture);
    });

    sched::MixtureTable table;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        table.insert(jobs[i].key, jobs[i].chain, std::move(fitted[i]));
    }
    return table;
}

CalibrationBundle calibrate(const Survey& survey, const CellTable& cells,
                            const DistanceFn& distance, const CalibrationOptions& options)
{
    if (survey.empty()) {
        throw SchemaError("empty survey");
    }
    CalibrationBundle bundle;

    auto chain_build = build_chain_tables(survey);
    bundle.chains = std::move(chain_build.table);
    bundle.mixtures = fit_dwell_mixtures(survey, bundle.chains, options.threads);

    for (auto purpose : kAllActivities) {
        const auto purpose_trips = survey.trips(purpose);
        if (purpose_trips.empty()) {
            util::log_warn("no trips with purpose '" + std::string(to_string(purpose)) +
                           "'; keeping default coefficients");
            continue;
        }
        std::set<std::size_t> active;
        if (options.feature_selection) {
            active = rank_and_select_features(purpose_trips, cells, options.selection_epsilon);
            if (active.empty()) {
                util::log_warn("feature selection kept nothing for '" +
                               std::string(to_string(purpose)) + "'; constant attraction");
            }
            // An empty active set still runs a (constant-model) fit below so
            // the stored coefficients are explicit zeros.
            if (active.empty()) {
                active.insert(kFeatureCount); // out-of-range: freeze everything
            }
        }
        const auto fit = fit_attraction(purpose_trips, cells, active);
        bundle.attraction.mutable_for_purpose(purpose) = fit.theta;

        if (purpose != Purpose::home) {
            auto selection = select_deterrence_form(purpose_trips, cells, fit.theta, distance,
                                                    derive_seed(options.seed,
                                                                static_cast<std::uint64_t>(purpose)));
            bundle.deterrence.mutable_for_purpose(purpose) = selection.best.params;
        }
    }
    return bundle;
}

} // namespace mobgen::calib
