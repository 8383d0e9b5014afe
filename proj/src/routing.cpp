#include "mobgen/routing.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <queue>

#include "mobgen/errors.hpp"
#include "mobgen/geo.hpp"
#include "mobgen/util.hpp"

namespace mobgen::routing {

RoadClassTable RoadClassTable::defaults()
{
    RoadClassTable t;
    t.classes = {
        {"motorway", 120.0},      {"motorway_link", 60.0}, {"trunk", 100.0},
        {"trunk_link", 60.0},     {"primary", 80.0},       {"primary_link", 50.0},
        {"secondary", 70.0},      {"secondary_link", 50.0},{"tertiary", 60.0},
        {"tertiary_link", 50.0},  {"unclassified", 50.0},  {"residential", 30.0},
        {"service", 20.0},
    };
    return t;
}

const double* RoadClassTable::speed_kmh(const std::string& highway_class) const
{
    for (const auto& [name, speed] : classes) {
        if (name == highway_class) {
            return &speed;
        }
    }
    return nullptr;
}

std::size_t RoadGraph::edge_count() const
{
    std::size_t n = 0;
    for (const auto& adj : adjacency_) {
        n += adj.size();
    }
    return n / 2;
}

std::uint32_t RoadGraph::add_node(const LonLat& pos)
{
    positions_.push_back(pos);
    adjacency_.emplace_back();
    return static_cast<std::uint32_t>(positions_.size() - 1);
}

void RoadGraph::add_edge(std::uint32_t a, std::uint32_t b, double length_m, double speed_kmh)
{
    if (!(length_m > 0.0)) {
        throw ArgumentError("edge length must be positive");
    }
    adjacency_[a].push_back(Edge{b, static_cast<float>(length_m), static_cast<float>(speed_kmh)});
    adjacency_[b].push_back(Edge{a, static_cast<float>(length_m), static_cast<float>(speed_kmh)});
}

std::uint32_t RoadGraph::snap(const LonLat& p) const
{
    if (positions_.empty()) {
        throw EmptyModelError("snap on empty road graph");
    }
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < positions_.size(); ++i) {
        const double d = geo::haversine_m(p, positions_[i]);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<double> RoadGraph::shortest_path_tree(std::uint32_t source, double limit_m) const
{
    std::vector<double> dist(positions_.size(), std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
    dist[source] = 0.0;
    frontier.emplace(0.0, source);
    while (!frontier.empty()) {
        auto [d, u] = frontier.top();
        frontier.pop();
        if (d > dist[u]) {
            continue;
        }
        if (d > limit_m) {
            break; // every remaining label is at least this long
        }
        for (const Edge& e : adjacency_[u]) {
            const double nd = d + e.length_m;
            if (nd < dist[e.to]) {
                dist[e.to] = nd;
                frontier.emplace(nd, e.to);
            }
        }
    }
    return dist;
}

RoadGraph::FastestResult RoadGraph::fastest_route(const LonLat& from, const LonLat& to) const
{
    const std::uint32_t s = snap(from);
    const std::uint32_t t = snap(to);
    std::vector<double> time_s(positions_.size(), std::numeric_limits<double>::infinity());
    std::vector<double> dist_m(positions_.size(), 0.0);
    using Entry = std::pair<double, std::uint32_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> frontier;
    time_s[s] = 0.0;
    frontier.emplace(0.0, s);
    while (!frontier.empty()) {
        auto [d, u] = frontier.top();
        frontier.pop();
        if (d > time_s[u]) {
            continue;
        }
        if (u == t) {
            break;
        }
        for (const Edge& e : adjacency_[u]) {
            const double nd = d + e.length_m / (e.speed_kmh / 3.6);
            if (nd < time_s[e.to]) {
                time_s[e.to] = nd;
                dist_m[e.to] = dist_m[u] + e.length_m;
                frontier.emplace(nd, e.to);
            }
        }
    }
    FastestResult r;
    r.reachable = std::isfinite(time_s[t]);
    if (r.reachable) {
        r.distance_m = dist_m[t];
        r.travel_time_s = time_s[t];
    }
    else {
        r.distance_m = geo::haversine_m(from, to);
        // Unreachable: assume an effective 30 km/h over the beeline.
        r.travel_time_s = r.distance_m / (30.0 / 3.6);
    }
    return r;
}

namespace {
constexpr char kGraphMagic[4] = {'M', 'G', 'R', 'G'};
constexpr std::uint32_t kGraphVersion = 1;
} // namespace

void RoadGraph::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write road graph: " + path.string());
    }
    out.write(kGraphMagic, 4);
    const std::uint32_t version = kGraphVersion;
    const std::uint64_t nodes = positions_.size();
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&nodes), sizeof(nodes));
    for (const auto& p : positions_) {
        out.write(reinterpret_cast<const char*>(&p.lon), sizeof(double));
        out.write(reinterpret_cast<const char*>(&p.lat), sizeof(double));
    }
    for (std::uint32_t u = 0; u < positions_.size(); ++u) {
        // Each undirected edge once, from its smaller endpoint.
        for (const Edge& e : adjacency_[u]) {
            if (e.to < u) {
                continue;
            }
            out.write(reinterpret_cast<const char*>(&u), sizeof(u));
            out.write(reinterpret_cast<const char*>(&e.to), sizeof(e.to));
            out.write(reinterpret_cast<const char*>(&e.length_m), sizeof(e.length_m));
            out.write(reinterpret_cast<const char*>(&e.speed_kmh), sizeof(e.speed_kmh));
        }
    }
}

RoadGraph RoadGraph::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open road graph: " + path.string());
    }
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t nodes = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&nodes), sizeof(nodes));
    if (!in || std::memcmp(magic, kGraphMagic, 4) != 0 || version != kGraphVersion) {
        throw ModelLoadError("not a road graph file: " + path.string());
    }
    RoadGraph graph;
    for (std::uint64_t i = 0; i < nodes; ++i) {
        LonLat p;
        in.read(reinterpret_cast<char*>(&p.lon), sizeof(double));
        in.read(reinterpret_cast<char*>(&p.lat), sizeof(double));
        graph.add_node(p);
    }
    std::uint32_t u = 0, v = 0;
    float len = 0.0f, speed = 0.0f;
    while (in.read(reinterpret_cast<char*>(&u), sizeof(u))) {
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        in.read(reinterpret_cast<char*>(&len), sizeof(len));
        in.read(reinterpret_cast<char*>(&speed), sizeof(speed));
        if (!in || u >= nodes || v >= nodes) {
            throw ModelLoadError("truncated road graph: " + path.string());
        }
        graph.add_edge(u, v, len, speed);
    }
    return graph;
}

RoadGraph build_road_graph(const osm::OsmData& data, const RoadClassTable& classes)
{
    RoadGraph graph;
    std::unordered_map<std::int64_t, std::uint32_t> node_of;

    for (const auto& way : data.ways) {
        const std::string* highway = osm::find_tag(way.tags, "highway");
        if (highway == nullptr) {
            continue;
        }
        const double* speed = classes.speed_kmh(*highway);
        if (speed == nullptr) {
            continue;
        }
        for (std::size_t i = 0; i + 1 < way.refs.size(); ++i) {
            const osm::Node* a = data.find_node(way.refs[i]);
            const osm::Node* b = data.find_node(way.refs[i + 1]);
            if (a == nullptr || b == nullptr) {
                continue;
            }
            const double len = geo::haversine_m(a->pos, b->pos);
            if (!(len > 0.0)) {
                continue;
            }
            auto node_id = [&](const osm::Node* n) {
                auto it = node_of.find(n->id);
                if (it != node_of.end()) {
                    return it->second;
                }
                const std::uint32_t id = graph.add_node(n->pos);
                node_of.emplace(n->id, id);
                return id;
            };
            graph.add_edge(node_id(a), node_id(b), len, *speed);
        }
    }
    if (graph.node_count() == 0) {
        throw EmptyModelError("no drivable ways in OSM input");
    }
    return graph;
}

RoadGraph build_road_graph(const std::filesystem::path& osm_file, const RoadClassTable& classes)
{
    return build_road_graph(osm::read_file(osm_file), classes);
}

ShortestDistanceResult shortest_distance(const RoadGraph& graph, const LonLat& from, const LonLat& to)
{
    const std::uint32_t s = graph.snap(from);
    const std::uint32_t t = graph.snap(to);
    if (s == t) {
        return {0.0, false};
    }
    auto dist = graph.shortest_path_tree(s);
    if (std::isfinite(dist[t])) {
        return {dist[t], false};
    }
    return {geo::haversine_m(from, to), true};
}

DistanceMatrix::DistanceMatrix(std::size_t n, double bin_width_m)
    : n_(n), bin_width_m_(bin_width_m), distances_(n * n, 0.0f), methods_((n * n + 7) / 8, 0)
{
}

void DistanceMatrix::set(std::size_t from, std::size_t to, double meters, Method method)
{
    const std::size_t idx = from * n_ + to;
    distances_[idx] = static_cast<float>(meters);
    const std::size_t byte = idx >> 3;
    const std::uint8_t mask = static_cast<std::uint8_t>(1u << (idx & 7));
    if (method == Method::beeline) {
        methods_[byte] |= mask;
    }
    else {
        methods_[byte] &= static_cast<std::uint8_t>(~mask);
    }
}

namespace {
constexpr char kMatrixMagic[4] = {'M', 'G', 'D', 'M'};
constexpr std::uint32_t kMatrixVersion = 1;
} // namespace

void DistanceMatrix::save(const std::filesystem::path& path) const
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write distance matrix: " + path.string());
    }
    out.write(kMatrixMagic, 4);
    const std::uint32_t version = kMatrixVersion;
    const std::uint32_t count = static_cast<std::uint32_t>(n_);
    const float bin_width = static_cast<float>(bin_width_m_);
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    out.write(reinterpret_cast<const char*>(&bin_width), sizeof(bin_width));
    out.write(reinterpret_cast<const char*>(distances_.data()),
              static_cast<std::streamsize>(distances_.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(methods_.data()),
              static_cast<std::streamsize>(methods_.size()));
}

DistanceMatrix DistanceMatrix::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open distance matrix: " + path.string());
    }
    char magic[4];
    std::uint32_t version = 0, count = 0;
    float bin_width = 0.0f;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    in.read(reinterpret_cast<char*>(&bin_width), sizeof(bin_width));
    if (!in || std::memcmp(magic, kMatrixMagic, 4) != 0) {
        throw ModelLoadError("not a distance matrix file: " + path.string());
    }
    if (version != kMatrixVersion) {
        throw ModelLoadError("unsupported distance matrix version in " + path.string());
    }
    DistanceMatrix m(count, bin_width);
    in.read(reinterpret_cast<char*>(m.distances_.data()),
            static_cast<std::streamsize>(m.distances_.size() * sizeof(float)));
    in.read(reinterpret_cast<char*>(m.methods_.data()),
            static_cast<std::streamsize>(m.methods_.size()));
    if (!in) {
        throw ModelLoadError("truncated distance matrix: " + path.string());
    }
    return m;
}

DistanceMatrix distance_matrix(const RoadGraph& graph, const std::vector<LonLat>& centroids,
                               const MatrixOptions& options)
{
    if (centroids.empty()) {
        throw ArgumentError("distance matrix needs at least one cell");
    }
    const std::size_t n = centroids.size();
    DistanceMatrix matrix(n, options.bin_width_m);

    std::vector<std::uint32_t> snapped(n);
    for (std::size_t i = 0; i < n; ++i) {
        snapped[i] = graph.snap(centroids[i]);
    }

    util::parallel_for(n, options.threads, [&](std::size_t s) {
        auto dist = graph.shortest_path_tree(snapped[s], options.limit_m);
        for (std::size_t t = 0; t < n; ++t) {
            if (t == s) {
                matrix.set(s, t, 0.0, DistanceMatrix::Method::routed);
                continue;
            }
            const double d = dist[snapped[t]];
            if (std::isfinite(d) && d <= options.limit_m) {
                matrix.set(s, t, d, DistanceMatrix::Method::routed);
            }
            else {
                matrix.set(s, t, geo::haversine_m(centroids[s], centroids[t]),
                           DistanceMatrix::Method::beeline);
            }
        }
    });
    return matrix;
}

std::size_t digitize_distance(double meters, double bin_width_m)
{
    if (meters < 0.0) {
        throw ArgumentError("distance must be non-negative");
    }
    if (!(bin_width_m > 0.0)) {
        throw ArgumentError("bin width must be positive");
    }
    return static_cast<std::size_t>(meters / bin_width_m);
}

double bin_representative_m(std::size_t bin, double bin_width_m)
{
    return (static_cast<double>(bin) + 0.5) * bin_width_m;
}

} // namespace mobgen::routing
