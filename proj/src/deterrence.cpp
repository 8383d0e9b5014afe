#include "mobgen/deterrence.hpp"

#include <cmath>
#include <limits>

#include "mobgen/errors.hpp"

namespace mobgen {

std::string_view to_string(DeterrenceForm f)
{
    switch (f) {
    case DeterrenceForm::E: return "E";
    case DeterrenceForm::PE: return "PE";
    case DeterrenceForm::L: return "L";
    case DeterrenceForm::LE: return "LE";
    }
    return "E";
}

DeterrenceForm deterrence_form_from_string(std::string_view s)
{
    if (s == "E") return DeterrenceForm::E;
    if (s == "PE" || s == "EP") return DeterrenceForm::PE;
    if (s == "L") return DeterrenceForm::L;
    if (s == "LE") return DeterrenceForm::LE;
    throw SchemaError("unknown deterrence form: '" + std::string(s) + "'");
}

std::size_t deterrence_param_count(DeterrenceForm f)
{
    switch (f) {
    case DeterrenceForm::E: return 1;
    case DeterrenceForm::PE: return 2;
    case DeterrenceForm::L: return 2;
    case DeterrenceForm::LE: return 3;
    }
    return 1;
}

DeterrenceParams DeterrenceParams::exponential(double t0)
{
    DeterrenceParams p;
    p.form = DeterrenceForm::E;
    p.theta = {t0, 0.0, 0.0};
    return p;
}

DeterrenceSet DeterrenceSet::defaults()
{
    DeterrenceSet set;

    auto& work = set.mutable_for_purpose(Purpose::work);
    work.form = DeterrenceForm::PE;
    work.theta = {-0.035, -0.919, 0.0};

    auto& school = set.mutable_for_purpose(Purpose::school);
    school.form = DeterrenceForm::LE;
    school.theta = {-0.235, -1.176, 0.005};
    school.cutoff_km = 827.0; // the fitted form turns upward past its minimum

    auto& shopping = set.mutable_for_purpose(Purpose::shopping);
    shopping.form = DeterrenceForm::L;
    shopping.theta = {-0.215, -1.414, 0.0};

    auto& other = set.mutable_for_purpose(Purpose::other);
    other.form = DeterrenceForm::L;
    other.theta = {-0.180, -1.067, 0.0};

    // `home` keeps the neutral slot: the choice model never applies
    // deterrence to home locations.
    return set;
}

std::array<double, 3> deterrence_features(double d_km, DeterrenceForm form)
{
    const double d = std::max(d_km, kDistanceFloorKm);
    const double ld = std::log(d);
    switch (form) {
    case DeterrenceForm::E: return {d, 0.0, 0.0};
    case DeterrenceForm::PE: return {d, ld, 0.0};
    case DeterrenceForm::L: return {ld * ld, ld, 0.0};
    case DeterrenceForm::LE: return {ld * ld, ld, d};
    }
    return {d, 0.0, 0.0};
}

double log_deterrence(double d_km, const DeterrenceParams& params)
{
    if (params.cutoff_km && d_km > *params.cutoff_km) {
        return -std::numeric_limits<double>::infinity();
    }
    const auto g = deterrence_features(d_km, params.form);
    return params.theta[0] * g[0] + params.theta[1] * g[1] + params.theta[2] * g[2];
}

} // namespace mobgen
