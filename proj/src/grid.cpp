#include "mobgen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <json.hpp>

#include "mobgen/errors.hpp"
#include "mobgen/util.hpp"

namespace mobgen::grid {

namespace {

using geo::XY;

double dist(const XY& a, const XY& b)
{
    return std::hypot(a.x() - b.x(), a.y() - b.y());
}

XY mean_point(const std::vector<XY>& points, const std::vector<std::size_t>& members)
{
    double sx = 0.0, sy = 0.0;
    for (std::size_t i : members) {
        sx += points[i].x();
        sy += points[i].y();
    }
    const double n = static_cast<double>(members.size());
    return XY{sx / n, sy / n};
}

double total_dispersion(const std::vector<XY>& points, const std::vector<std::size_t>& members,
                        const XY& centroid)
{
    double sum = 0.0;
    for (std::size_t i : members) {
        sum += dist(points[i], centroid);
    }
    return sum;
}

/// Two seed points for the 2-means split: the exact farthest pair for small
/// clusters, a deterministic double-sweep approximation for large ones.
std::pair<std::size_t, std::size_t> split_seeds(const std::vector<XY>& points,
                                                const std::vector<std::size_t>& members,
                                                const XY& centroid)
{
    constexpr std::size_t kExactLimit = 2048;
    if (members.size() <= kExactLimit) {
        std::size_t best_a = members[0], best_b = members[0];
        double best = -1.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            for (std::size_t j = i + 1; j < members.size(); ++j) {
                const double d = dist(points[members[i]], points[members[j]]);
                if (d > best) {
                    best = d;
                    best_a = members[i];
                    best_b = members[j];
                }
            }
        }
        return {best_a, best_b};
    }
    auto farthest_from = [&](const XY& ref) {
        std::size_t best = members[0];
        double best_d = -1.0;
        for (std::size_t i : members) {
            const double d = dist(points[i], ref);
            if (d > best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    };
    const std::size_t a = farthest_from(centroid);
    const std::size_t b = farthest_from(points[a]);
    return {a, b};
}

struct Cluster {
    std::vector<std::size_t> members;
    XY centroid{0.0, 0.0};
    double dispersion = 0.0; // sum of member distances to centroid
};

void refresh(Cluster& c, const std::vector<XY>& points)
{
    c.centroid = mean_point(points, c.members);
    c.dispersion = total_dispersion(points, c.members, c.centroid);
}

/// Plain 2-means split; returns false if the cluster cannot be divided.
bool bisect(const Cluster& cluster, const std::vector<XY>& points, Cluster& left, Cluster& right)
{
    if (cluster.members.size() < 2) {
        return false;
    }
    auto [seed_a, seed_b] = split_seeds(points, cluster.members, cluster.centroid);
    if (dist(points[seed_a], points[seed_b]) == 0.0) {
        return false; // all members coincide
    }
    XY ca = points[seed_a];
    XY cb = points[seed_b];
    std::vector<std::size_t> la, lb;
    for (int iter = 0; iter < 50; ++iter) {
        std::vector<std::size_t> na, nb;
        for (std::size_t i : cluster.members) {
            const double da = dist(points[i], ca);
            const double db = dist(points[i], cb);
            (da <= db ? na : nb).push_back(i);
        }
        if (na.empty() || nb.empty()) {
            // Degenerate assignment; force the seed points apart.
            na = {seed_a};
            nb.clear();
            for (std::size_t i : cluster.members) {
                if (i != seed_a) {
                    nb.push_back(i);
                }
            }
        }
        const XY next_a = mean_point(points, na);
        const XY next_b = mean_point(points, nb);
        const bool stable = na == la && nb == lb;
        la = std::move(na);
        lb = std::move(nb);
        ca = next_a;
        cb = next_b;
        if (stable) {
            break;
        }
    }
    left.members = std::move(la);
    right.members = std::move(lb);
    refresh(left, points);
    refresh(right, points);
    return true;
}

} // namespace

std::vector<std::vector<std::size_t>> bisecting_kmeans(const std::vector<XY>& points,
                                                       double threshold)
{
    if (points.empty()) {
        throw ArgumentError("clustering needs at least one point");
    }
    if (!(threshold > 0.0)) {
        throw ArgumentError("clustering threshold must be positive");
    }

    std::vector<Cluster> clusters(1);
    clusters[0].members.resize(points.size());
    std::iota(clusters[0].members.begin(), clusters[0].members.end(), std::size_t{0});
    refresh(clusters[0], points);

    const double n = static_cast<double>(points.size());
    for (;;) {
        double total = 0.0;
        for (const auto& c : clusters) {
            total += c.dispersion;
        }
        if (total / n < threshold) {
            break;
        }
        std::size_t worst = clusters.size();
        double worst_dispersion = 0.0;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            if (clusters[i].members.size() >= 2 && clusters[i].dispersion > worst_dispersion) {
                worst_dispersion = clusters[i].dispersion;
                worst = i;
            }
        }
        if (worst == clusters.size()) {
            break; // nothing divisible left
        }
        Cluster left, right;
        if (!bisect(clusters[worst], points, left, right)) {
            clusters[worst].dispersion = 0.0; // coincident points; exclude from selection
            continue;
        }
        clusters[worst] = std::move(left);
        clusters.push_back(std::move(right));
    }

    std::vector<std::vector<std::size_t>> out;
    out.reserve(clusters.size());
    for (auto& c : clusters) {
        std::sort(c.members.begin(), c.members.end());
        out.push_back(std::move(c.members));
    }
    // Deterministic cell order: by first (smallest) member index.
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

std::vector<GridCell> build_grid(const std::vector<Building>& buildings,
                                 const geo::AreaGeometry& focus, double base_threshold_m,
                                 unsigned threads)
{
    if (buildings.empty()) {
        throw ArgumentError("grid needs at least one building");
    }

    const geo::Projection& proj = focus.projection();

    // Ring index: 0 inside the focus area, then 10 km bands outward.
    std::map<int, std::vector<std::size_t>> tiers;
    for (std::size_t i = 0; i < buildings.size(); ++i) {
        int tier = 0;
        if (!buildings[i].in_focus_area) {
            const double d = focus.distance_to_focus_m(buildings[i].coordinates);
            tier = 1 + static_cast<int>(d / kTierWidthM);
        }
        tiers[tier].push_back(i);
    }

    std::vector<std::pair<int, std::vector<std::size_t>>> tier_list(tiers.begin(), tiers.end());
    std::vector<std::vector<GridCell>> tier_cells(tier_list.size());

    util::parallel_for(tier_list.size(), threads, [&](std::size_t t) {
        const auto& [tier, indices] = tier_list[t];
        std::vector<geo::XY> points;
        points.reserve(indices.size());
        for (std::size_t i : indices) {
            points.push_back(proj.project(buildings[i].coordinates));
        }
        const double threshold = base_threshold_m * std::pow(2.0, tier);
        auto clusters = bisecting_kmeans(points, threshold);

        std::vector<GridCell>& cells = tier_cells[t];
        cells.reserve(clusters.size());
        for (auto& cluster : clusters) {
            GridCell cell;
            cell.tier = tier;
            cell.members.reserve(cluster.size());
            double lon = 0.0, lat = 0.0;
            for (std::size_t local : cluster) {
                const std::size_t b = indices[local];
                cell.members.push_back(static_cast<std::uint32_t>(b));
                lon += buildings[b].coordinates.lon;
                lat += buildings[b].coordinates.lat;
                const FeatureVector x = buildings[b].features();
                for (std::size_t k = 0; k < kFeatureCount; ++k) {
                    cell.feature_sums[k] += x[k];
                }
            }
            std::sort(cell.members.begin(), cell.members.end());
            const double n = static_cast<double>(cell.members.size());
            cell.centroid = LonLat{lon / n, lat / n};
            cell.member_count = n;
            cells.push_back(std::move(cell));
        }
    });

    std::vector<GridCell> all;
    for (auto& cells : tier_cells) {
        for (auto& cell : cells) {
            cell.id = static_cast<std::uint32_t>(all.size());
            all.push_back(std::move(cell));
        }
    }
    return all;
}

void aggregate_attractions(std::vector<GridCell>& cells, const std::vector<Building>& buildings,
                           const AttractionCoeffs& coeffs)
{
    for (auto& cell : cells) {
        for (std::size_t p = 0; p < kActivityCount; ++p) {
            double sum = 0.0;
            for (std::uint32_t b : cell.members) {
                sum += attraction(buildings[b], static_cast<Purpose>(p), coeffs);
            }
            cell.attraction[p] = sum;
        }
    }
}

std::vector<std::uint32_t> building_cell_index(const std::vector<GridCell>& cells,
                                               std::size_t building_count)
{
    std::vector<std::uint32_t> index(building_count, 0);
    for (const auto& cell : cells) {
        for (std::uint32_t b : cell.members) {
            index[b] = cell.id;
        }
    }
    return index;
}

void save_grid(const std::vector<GridCell>& cells, const std::filesystem::path& path)
{
    nlohmann::json doc;
    doc["schema"] = "mobgen-grid-v1";
    auto& arr = doc["cells"] = nlohmann::json::array();
    for (const auto& cell : cells) {
        nlohmann::json c;
        c["id"] = cell.id;
        c["members"] = cell.members;
        c["centroid"] = {cell.centroid.lon, cell.centroid.lat};
        c["tier"] = cell.tier;
        arr.push_back(std::move(c));
    }
    util::write_file(path, doc.dump());
}

std::vector<GridCell> load_grid(const std::filesystem::path& path,
                                const std::vector<Building>& buildings)
{
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(util::read_file(path));
    }
    catch (const nlohmann::json::exception& e) {
        throw ModelLoadError("bad grid file " + path.string() + ": " + e.what());
    }
    if (doc.value("schema", "") != "mobgen-grid-v1") {
        throw ModelLoadError("unsupported grid schema in " + path.string());
    }
    std::vector<GridCell> cells;
    for (const auto& c : doc.at("cells")) {
        GridCell cell;
        cell.id = c.at("id").get<std::uint32_t>();
        cell.members = c.at("members").get<std::vector<std::uint32_t>>();
        cell.centroid = LonLat{c.at("centroid").at(0).get<double>(), c.at("centroid").at(1).get<double>()};
        cell.tier = c.at("tier").get<int>();
        for (std::uint32_t b : cell.members) {
            if (b >= buildings.size()) {
                throw ModelLoadError("grid references missing building index in " + path.string());
            }
            const FeatureVector x = buildings[b].features();
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                cell.feature_sums[k] += x[k];
            }
        }
        cell.member_count = static_cast<double>(cell.members.size());
        cells.push_back(std::move(cell));
    }
    return cells;
}

} // namespace mobgen::grid
