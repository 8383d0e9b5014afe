#include "mobgen/bundle.hpp"

#include <json.hpp>

#include "mobgen/errors.hpp"
#include "mobgen/util.hpp"

namespace mobgen {

namespace {

using nlohmann::json;

constexpr const char* kSchemaId = "mobgen-bundle-v1";

json features_to_json(const sched::FeatureKey& key)
{
    json j;
    j["age"] = to_string(key.features.age);
    j["homogenous_group"] = to_string(key.features.homogenous_group);
    j["mobility_group"] = to_string(key.features.mobility_group);
    j["weekday"] = to_string(key.weekday);
    return j;
}

sched::FeatureKey features_from_json(const json& j)
{
    sched::FeatureKey key;
    key.features.age = age_from_string(j.at("age").get<std::string>());
    key.features.homogenous_group = homogenous_from_string(j.at("homogenous_group").get<std::string>());
    key.features.mobility_group = mobility_from_string(j.at("mobility_group").get<std::string>());
    key.weekday = weekday_from_string(j.at("weekday").get<std::string>());
    return key;
}

json chain_to_json(const sched::Chain& chain)
{
    json arr = json::array();
    for (auto a : chain) {
        arr.push_back(std::string(to_string(a)));
    }
    return arr;
}

sched::Chain chain_from_json(const json& arr)
{
    sched::Chain chain;
    for (const auto& a : arr) {
        chain.push_back(activity_from_string(a.get<std::string>()));
    }
    return chain;
}

json mixture_to_json(const gmm::Mixture& mixture)
{
    json comps = json::array();
    for (const auto& c : mixture.components) {
        json jc;
        jc["weight"] = c.weight;
        json mean = json::array();
        for (Eigen::Index i = 0; i < c.mean.size(); ++i) {
            mean.push_back(c.mean(i));
        }
        jc["mean"] = std::move(mean);
        json cov = json::array(); // row-major
        for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
            for (Eigen::Index col = 0; col < c.covariance.cols(); ++col) {
                cov.push_back(c.covariance(r, col));
            }
        }
        jc["covariance"] = std::move(cov);
        comps.push_back(std::move(jc));
    }
    return comps;
}

gmm::Mixture mixture_from_json(const json& comps)
{
    gmm::Mixture mixture;
    for (const auto& jc : comps) {
        gmm::Component c;
        c.weight = jc.at("weight").get<double>();
        const auto& mean = jc.at("mean");
        const Eigen::Index d = static_cast<Eigen::Index>(mean.size());
        c.mean.resize(d);
        for (Eigen::Index i = 0; i < d; ++i) {
            c.mean(i) = mean.at(static_cast<std::size_t>(i)).get<double>();
        }
        const auto& cov = jc.at("covariance");
        if (static_cast<Eigen::Index>(cov.size()) != d * d) {
            throw ModelLoadError("covariance entry count does not match the mean dimension");
        }
        c.covariance.resize(d, d);
        for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index col = 0; col < d; ++col) {
                c.covariance(r, col) = cov.at(static_cast<std::size_t>(r * d + col)).get<double>();
            }
        }
        mixture.components.push_back(std::move(c));
    }
    if (!mixture.covariances_valid()) {
        throw ModelLoadError("bundle contains a non positive semi-definite dwell covariance");
    }
    return mixture;
}

} // namespace

void CalibrationBundle::save(const std::filesystem::path& path) const
{
    json doc;
    doc["schema"] = kSchemaId;

    json jattr;
    for (auto purpose : kAllActivities) {
        auto span = attraction.for_purpose(purpose);
        jattr[std::string(to_string(purpose))] = std::vector<double>(span.begin(), span.end());
    }
    doc["attraction"] = std::move(jattr);

    json jdet;
    for (auto purpose : kAllActivities) {
        if (purpose == Purpose::home) {
            continue; // home never uses deterrence
        }
        const DeterrenceParams& p = deterrence.for_purpose(purpose);
        json jp;
        jp["form"] = std::string(to_string(p.form));
        jp["theta"] = std::vector<double>(p.theta.begin(), p.theta.end());
        if (p.cutoff_km) {
            jp["cutoff_km"] = *p.cutoff_km;
        }
        jdet[std::string(to_string(purpose))] = std::move(jp);
    }
    doc["deterrence"] = std::move(jdet);

    json jchains = json::array();
    for (const auto& [packed, entry] : chains.entries()) {
        (void)packed;
        json row = features_to_json(entry.first);
        row["sample_count"] = entry.second.sample_count;
        json list = json::array();
        for (const auto& [chain, p] : entry.second.chains) {
            json jc;
            jc["activities"] = chain_to_json(chain);
            jc["p"] = p;
            list.push_back(std::move(jc));
        }
        row["chains"] = std::move(list);
        jchains.push_back(std::move(row));
    }
    doc["chains"] = std::move(jchains);

    json jmix = json::array();
    for (const auto& [key, entry] : mixtures.entries()) {
        (void)key;
        json row = features_to_json(entry.first);
        row["chain"] = chain_to_json(chain_from_string(key.second));
        row["components"] = mixture_to_json(entry.second.mixture);
        jmix.push_back(std::move(row));
    }
    doc["dwell_mixtures"] = std::move(jmix);

    util::write_file(path, doc.dump(1));
}

CalibrationBundle CalibrationBundle::load(const std::filesystem::path& path)
{
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    }
    catch (const json::exception& e) {
        throw ModelLoadError("bad bundle file " + path.string() + ": " + e.what());
    }
    if (doc.value("schema", "") != kSchemaId) {
        throw ModelLoadError("unsupported bundle schema in " + path.string());
    }

    CalibrationBundle bundle;
    bundle.attraction = AttractionCoeffs{};
    for (auto purpose : kAllActivities) {
        const auto name = std::string(to_string(purpose));
        if (!doc.at("attraction").contains(name)) {
            throw ModelLoadError("bundle lacks attraction coefficients for " + name);
        }
        const auto vec = doc["attraction"][name].get<std::vector<double>>();
        if (vec.size() != kFeatureCount) {
            throw ModelLoadError("attraction vector for " + name + " must have " +
                                 std::to_string(kFeatureCount) + " entries");
        }
        auto& theta = bundle.attraction.mutable_for_purpose(purpose);
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            if (vec[k] < 0.0) {
                throw ModelLoadError("negative attraction coefficient for " + name);
            }
            theta[k] = vec[k];
        }
    }

    bundle.deterrence = DeterrenceSet{};
    for (auto purpose : kAllActivities) {
        if (purpose == Purpose::home) {
            continue;
        }
        const auto name = std::string(to_string(purpose));
        if (!doc.at("deterrence").contains(name)) {
            throw ModelLoadError("bundle lacks deterrence parameters for " + name);
        }
        const auto& jp = doc["deterrence"][name];
        DeterrenceParams p;
        p.form = deterrence_form_from_string(jp.at("form").get<std::string>());
        const auto theta = jp.at("theta").get<std::vector<double>>();
        for (std::size_t i = 0; i < p.theta.size() && i < theta.size(); ++i) {
            p.theta[i] = theta[i];
        }
        if (jp.contains("cutoff_km") && !jp["cutoff_km"].is_null()) {
            p.cutoff_km = jp["cutoff_km"].get<double>();
        }
        bundle.deterrence.mutable_for_purpose(purpose) = p;
    }

    for (const auto& row : doc.at("chains")) {
        sched::FeatureKey key = features_from_json(row);
        sched::ChainDistribution dist;
        dist.sample_count = row.at("sample_count").get<std::size_t>();
        double total = 0.0;
        for (const auto& jc : row.at("chains")) {
            sched::Chain chain = chain_from_json(jc.at("activities"));
            const double p = jc.at("p").get<double>();
            total += p;
            dist.chains.emplace_back(std::move(chain), p);
        }
        if (!dist.chains.empty() && std::abs(total - 1.0) > 1e-6) {
            throw ModelLoadError("chain probabilities must sum to 1 in " + path.string());
        }
        bundle.chains.insert(key, std::move(dist));
    }

    for (const auto& row : doc.at("dwell_mixtures")) {
        sched::FeatureKey key = features_from_json(row);
        sched::Chain chain = chain_from_json(row.at("chain"));
        sched::DwellMixture mixture;
        mixture.mixture = mixture_from_json(row.at("components"));
        const std::size_t expected = chain.size() - 1;
        if (mixture.mixture.dimension() != expected) {
            throw ModelLoadError("dwell mixture dimension mismatch for chain '" +
                                 chain_to_string(chain) + "'");
        }
        bundle.mixtures.insert(key, chain, std::move(mixture));
    }

    return bundle;
}

} // namespace mobgen
