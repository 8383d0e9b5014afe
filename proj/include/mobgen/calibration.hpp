#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mobgen/bundle.hpp"
#include "mobgen/geo.hpp"
#include "mobgen/building.hpp"
#include "mobgen/deterrence.hpp"
#include "mobgen/routing.hpp"
#include "mobgen/schedule.hpp"

namespace mobgen::calib {

/// One destination-choice unit of the calibration data: aggregated features
/// of all buildings in the cell, plus the centroid for distances.
struct CellFeatures {
    std::uint32_t id = 0;
    LonLat coordinates;
    double count = 0.0; // member buildings; the constant term of the attraction
    FeatureVector features{};
};

struct CellTable {
    std::vector<CellFeatures> cells; // index == id

    void save(const std::filesystem::path& path) const;
    static CellTable load(const std::filesystem::path& path);
};

/// meters between two calibration cells
using DistanceFn = std::function<double(std::uint32_t, std::uint32_t)>;

/// Beeline distances over the cell centroids.
DistanceFn beeline_distances(const CellTable& cells);

/// One surveyed person-day, reconstructed from the trip-diary rows.
struct SurveyDay {
    std::int64_t person_id = 0;
    SocioFeatures features;
    Weekday weekday = Weekday::undefined;
    sched::Chain chain;                // chain[0] is the day's first activity
    std::vector<std::uint32_t> cells;  // one per activity
    std::vector<double> dwell_hours;   // one per activity except the last
};

struct SurveyTrip {
    std::uint32_t origin_cell = 0;
    std::uint32_t dest_cell = 0;
    Purpose purpose = Purpose::other;
};

struct Survey {
    std::vector<SurveyDay> days;

    std::vector<SurveyTrip> trips() const;
    std::vector<SurveyTrip> trips(Purpose purpose) const;
    bool empty() const { return days.empty(); }

    /// Trip-diary CSV with header person_id,age,hom_group,mob_group,weekday,
    /// trip_index,purpose,origin_cell,dest_cell,start_min,end_min. Days
    /// without trips carry a single marker row with trip_index -1.
    void save_csv(const std::filesystem::path& path) const;
    static Survey load_csv(const std::filesystem::path& path);
};

// --- attraction -----------------------------------------------------------

struct AttractionFit {
    std::array<double, kFeatureCount> theta{};
    double log_likelihood = 0.0;
    int iterations = 0;
};

/// Maximum-likelihood fit of the attraction coefficients on cell-level
/// destination counts, theta >= 0. `active` masks the features allowed to
/// move (empty = all twelve).
AttractionFit fit_attraction(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                             const std::set<std::size_t>& active = {});

/// Leave-one-out importance ranking followed by forward selection; stops
/// when the mean per-trip log-likelihood gain drops to `epsilon` or below.
std::set<std::size_t> rank_and_select_features(const std::vector<SurveyTrip>& trips,
                                               const CellTable& cells, double epsilon = 1e-4);

// --- deterrence (digitized-distance likelihood) ----------------------------

/// Per-origin attraction mass by distance bin: the part of the reduced
/// likelihood that does not depend on the deterrence parameters.
struct BinnedAttraction {
    double bin_width_m = routing::kDefaultBinWidthM;
    std::vector<std::uint32_t> origins;       // distinct origin cells
    std::vector<double> trip_counts;          // trips per distinct origin
    std::vector<std::vector<double>> mass;    // [origin][bin] = sum of attractions
    std::size_t bin_count = 0;
};

BinnedAttraction bin_attractions(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                                 const std::array<double, kFeatureCount>& theta,
                                 const DistanceFn& distance,
                                 double bin_width_m = routing::kDefaultBinWidthM);

/// Reduced log-likelihood of deterrence parameters on digitized distances.
double reduced_log_likelihood(const DeterrenceParams& params,
                              const std::vector<SurveyTrip>& trips,
                              const BinnedAttraction& binned, const DistanceFn& distance);

/// Direct counterpart evaluated with exact (un-digitized) distances; the
/// constant attraction terms are dropped from both sides.
double direct_log_likelihood(const DeterrenceParams& params,
                             const std::vector<SurveyTrip>& trips, const CellTable& cells,
                             const std::array<double, kFeatureCount>& theta,
                             const DistanceFn& distance);

struct DeterrenceFit {
    DeterrenceParams params;
    double log_likelihood = 0.0;
    int iterations = 0;
};

/// Fit one functional form, attraction held fixed. A cutoff is attached when
/// the fitted form has an interior minimum inside the observed range.
DeterrenceFit fit_deterrence(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                             const std::array<double, kFeatureCount>& theta, DeterrenceForm form,
                             const DistanceFn& distance,
                             double bin_width_m = routing::kDefaultBinWidthM);

struct FormSelection {
    DeterrenceFit best;
    std::map<DeterrenceForm, double> ks_by_form;
};

/// Fit all four forms, simulate trip distances under each, and keep the form
/// whose distance distribution is closest to the survey by the KS statistic.
/// Near-ties go to the form with fewer parameters.
FormSelection select_deterrence_form(const std::vector<SurveyTrip>& trips, const CellTable& cells,
                                     const std::array<double, kFeatureCount>& theta,
                                     const DistanceFn& distance, std::uint64_t seed,
                                     std::size_t simulated_trips = 100000,
                                     double tie_epsilon = 0.005);

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b);

// --- chains and dwell times -------------------------------------------------

struct ChainTableBuild {
    sched::ChainTable table;
    /// Pre-discard length marginals per stored key (for diagnostics/tests).
    std::map<std::uint32_t, std::map<std::size_t, double>> length_marginals;
};

/// Empirical chain distributions per feature/weekday combination: drop
/// chains under the sample threshold, then recalibrate the length groups to
/// the pre-discard marginals.
ChainTableBuild build_chain_tables(const Survey& survey);

/// EM-fitted dwell mixtures for every retained (key, chain) combination;
/// component count chosen by BIC.
sched::MixtureTable fit_dwell_mixtures(const Survey& survey, const sched::ChainTable& chains,
                                       unsigned threads = 1);

// --- full pipeline ----------------------------------------------------------

struct CalibrationOptions {
    double bin_width_m = routing::kDefaultBinWidthM;
    double selection_epsilon = 1e-4;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    bool feature_selection = true;
};

/// Survey -> complete bundle: per-purpose attraction (with feature
/// selection), per-purpose deterrence form choice, chain tables, mixtures.
CalibrationBundle calibrate(const Survey& survey, const CellTable& cells,
                            const DistanceFn& distance, const CalibrationOptions& options = {});

} // namespace mobgen::calib
