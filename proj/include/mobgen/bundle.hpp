#pragma once

#include <filesystem>

#include "mobgen/attraction.hpp"
#include "mobgen/deterrence.hpp"
#include "mobgen/schedule.hpp"

namespace mobgen {

/// Everything the simulator needs that came out of calibration: attraction
/// and deterrence parameters, chain distributions and dwell-time mixtures.
struct CalibrationBundle {
    AttractionCoeffs attraction = AttractionCoeffs::defaults();
    DeterrenceSet deterrence = DeterrenceSet::defaults();
    sched::ChainTable chains;
    sched::MixtureTable mixtures;

    void save(const std::filesystem::path& path) const;
    static CalibrationBundle load(const std::filesystem::path& path);
};

} // namespace mobgen
