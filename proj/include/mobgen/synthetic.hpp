#pragma once

#include <cstdint>

#include "mobgen/bundle.hpp"
#include "mobgen/calibration.hpp"
#include "mobgen/rng.hpp"

namespace mobgen::calib {

/// Deterministic 32 x 32 lattice of 500 m cells with planted, mutually
/// independent POI counts and landuse areas. Standard geometry of the
/// calibration recovery tests.
CellTable make_synthetic_city();

/// Substitute for a real household travel survey: a complete, plausible
/// parameter set (shipped coefficient tables plus hand-specified chain and
/// dwell distributions) to drive the synthetic-survey generator.
CalibrationBundle reference_truth_bundle();

struct SurveyGenOptions {
    /// sample concrete weekdays instead of leaving them undefined
    bool sample_weekdays = false;
    /// trips whose purpose is home return to the person's home cell
    bool home_returns = true;
};

/// Run the forward model (chains, dwell times, Eq. 2-5 destinations at cell
/// level) for `person_days` single-day diaries and record the trips.
Survey generate_synthetic_survey(const CalibrationBundle& truth, const CellTable& city,
                                 std::size_t person_days, Rng& rng,
                                 const SurveyGenOptions& options = {});

} // namespace mobgen::calib
