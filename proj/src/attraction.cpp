#include "mobgen/attraction.hpp"

namespace mobgen {

AttractionCoeffs AttractionCoeffs::defaults()
{
    AttractionCoeffs c;
    auto& home = c.mutable_for_purpose(Purpose::home);
    home[kAreaResidential] = 0.0327;
    home[kPoiShops] = 314.09;
    home[kPoiSchools] = 1679.18;

    auto& work = c.mutable_for_purpose(Purpose::work);
    work[kPoiOffices] = 727.14;
    work[kPoiShops] = 280.69;
    work[kPoiSchools] = 611.39;

    auto& school = c.mutable_for_purpose(Purpose::school);
    school[kPoiOffices] = 339.04;
    school[kPoiShops] = 132.36;
    school[kPoiSchools] = 2115.64;
    school[kPoiUniversities] = 3061.74;

    auto& shopping = c.mutable_for_purpose(Purpose::shopping);
    shopping[kPoiShops] = 348.44;

    auto& other = c.mutable_for_purpose(Purpose::other);
    other[kAreaResidential] = 0.0370;
    other[kPoiOffices] = 2789.23;
    other[kPoiShops] = 2179.04;
    other[kPoiSchools] = 1966.55;

    return c;
}

double attraction_value(std::span<const double, kFeatureCount> theta, const FeatureVector& x,
                        double unit_count)
{
    double a = unit_count;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        a += theta[k] * x[k];
    }
    return a;
}

double attraction(const Building& b, Purpose purpose, const AttractionCoeffs& coeffs)
{
    return attraction_value(coeffs.for_purpose(purpose), b.features(), 1.0);
}

} // namespace mobgen
