// Regenerates data/default_bundle.json: the shipped coefficient tables plus
// chain/dwell tables calibrated against the synthetic-survey oracle. The
// chain and dwell content is a synthetic stand-in, not derived from any real
// household travel survey.

#include <iostream>

#include "mobgen/calibration.hpp"
#include "mobgen/synthetic.hpp"

int main(int argc, char** argv)
{
    using namespace mobgen;

    const std::filesystem::path out = argc > 1 ? argv[1] : "data/default_bundle.json";

    const calib::CellTable city = calib::make_synthetic_city();
    const CalibrationBundle truth = calib::reference_truth_bundle();

    Rng rng(20240901);
    calib::SurveyGenOptions options;
    options.sample_weekdays = true;
    const calib::Survey survey = calib::generate_synthetic_survey(truth, city, 30000, rng, options);

    auto chain_build = calib::build_chain_tables(survey);
    CalibrationBundle bundle;
    bundle.attraction = AttractionCoeffs::defaults();
    bundle.deterrence = DeterrenceSet::defaults();
    bundle.chains = std::move(chain_build.table);
    bundle.mixtures = calib::fit_dwell_mixtures(survey, bundle.chains, 2);
    bundle.save(out);

    std::cout << "wrote " << out.string() << "\n";
    return 0;
}
