#include "mobgen/types.hpp"

#include <sstream>

namespace mobgen {

std::string_view to_string(ActivityType a)
{
    switch (a) {
    case ActivityType::home: return "home";
    case ActivityType::work: return "work";
    case ActivityType::school: return "school";
    case ActivityType::shopping: return "shopping";
    case ActivityType::other: return "other";
    }
    return "home";
}

std::string_view to_upper_string(ActivityType a)
{
    switch (a) {
    case ActivityType::home: return "HOME";
    case ActivityType::work: return "WORK";
    case ActivityType::school: return "SCHOOL";
    case ActivityType::shopping: return "SHOPPING";
    case ActivityType::other: return "OTHER";
    }
    return "HOME";
}

std::string_view to_string(Landuse l)
{
    switch (l) {
    case Landuse::residential: return "residential";
    case Landuse::industrial: return "industrial";
    case Landuse::commercial: return "commercial";
    case Landuse::none: return "none";
    }
    return "none";
}

std::string_view to_string(AgeGroup a)
{
    switch (a) {
    case AgeGroup::a0_40: return "0-40";
    case AgeGroup::a40_60: return "40-60";
    case AgeGroup::a60_100: return "60-100";
    case AgeGroup::undefined: return "undefined";
    }
    return "undefined";
}

std::string_view to_string(HomogenousGroup g)
{
    switch (g) {
    case HomogenousGroup::working: return "working";
    case HomogenousGroup::non_working: return "non_working";
    case HomogenousGroup::student: return "student";
    case HomogenousGroup::undefined: return "undefined";
    }
    return "undefined";
}

std::string_view to_string(MobilityGroup m)
{
    switch (m) {
    case MobilityGroup::car_full: return "car_full";
    case MobilityGroup::car_mixed: return "car_mixed";
    case MobilityGroup::car_none: return "car_none";
    case MobilityGroup::undefined: return "undefined";
    }
    return "undefined";
}

std::string_view to_string(Weekday w)
{
    switch (w) {
    case Weekday::mon: return "mon";
    case Weekday::tue: return "tue";
    case Weekday::wed: return "wed";
    case Weekday::thu: return "thu";
    case Weekday::fri: return "fri";
    case Weekday::sat: return "sat";
    case Weekday::sun: return "sun";
    case Weekday::undefined: return "undefined";
    }
    return "undefined";
}

namespace {

[[noreturn]] void bad_enum(std::string_view kind, std::string_view got)
{
    throw SchemaError("unknown " + std::string(kind) + " value: '" + std::string(got) + "'");
}

} // namespace

ActivityType activity_from_string(std::string_view s)
{
    for (auto a : kAllActivities) {
        if (s == to_string(a) || s == to_upper_string(a)) {
            return a;
        }
    }
    bad_enum("activity", s);
}

Landuse landuse_from_string(std::string_view s)
{
    for (auto l : {Landuse::residential, Landuse::industrial, Landuse::commercial, Landuse::none}) {
        if (s == to_string(l)) {
            return l;
        }
    }
    bad_enum("landuse", s);
}

AgeGroup age_from_string(std::string_view s)
{
    for (auto a : {AgeGroup::a0_40, AgeGroup::a40_60, AgeGroup::a60_100, AgeGroup::undefined}) {
        if (s == to_string(a)) {
            return a;
        }
    }
    bad_enum("age", s);
}

HomogenousGroup homogenous_from_string(std::string_view s)
{
    for (auto g : {HomogenousGroup::working, HomogenousGroup::non_working,
                   HomogenousGroup::student, HomogenousGroup::undefined}) {
        if (s == to_string(g)) {
            return g;
        }
    }
    bad_enum("homogenous group", s);
}

MobilityGroup mobility_from_string(std::string_view s)
{
    for (auto m : {MobilityGroup::car_full, MobilityGroup::car_mixed,
                   MobilityGroup::car_none, MobilityGroup::undefined}) {
        if (s == to_string(m)) {
            return m;
        }
    }
    bad_enum("mobility group", s);
}

Weekday weekday_from_string(std::string_view s)
{
    for (int i = 0; i <= static_cast<int>(Weekday::undefined); ++i) {
        auto w = static_cast<Weekday>(i);
        if (s == to_string(w)) {
            return w;
        }
    }
    bad_enum("weekday", s);
}

std::string chain_to_string(const std::vector<ActivityType>& chain)
{
    std::string out;
    for (std::size_t i = 0; i < chain.size(); ++i) {
        if (i > 0) {
            out += '>';
        }
        out += to_string(chain[i]);
    }
    return out;
}

std::vector<ActivityType> chain_from_string(std::string_view s)
{
    std::vector<ActivityType> chain;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t next = s.find('>', pos);
        if (next == std::string_view::npos) {
            next = s.size();
        }
        auto tok = s.substr(pos, next - pos);
        if (!tok.empty()) {
            chain.push_back(activity_from_string(tok));
        }
        pos = next + 1;
        if (next == s.size()) {
            break;
        }
    }
    return chain;
}

} // namespace mobgen
