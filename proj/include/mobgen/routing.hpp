#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "mobgen/osm.hpp"
#include "mobgen/types.hpp"

namespace mobgen::routing {

inline constexpr double kDefaultDistanceLimitM = 300000.0;
inline constexpr double kDefaultBinWidthM = 50.0;

/// Highway classes accepted as drivable, with the speed (km/h) used when
/// converting distance to travel time.
struct RoadClassTable {
    std::vector<std::pair<std::string, double>> classes;

    static RoadClassTable defaults();
    const double* speed_kmh(const std::string& highway_class) const;
};

/// Undirected road graph; edge lengths are haversine polyline lengths.
class RoadGraph {
public:
    struct Edge {
        std::uint32_t to = 0;
        float length_m = 0.0f;
        float speed_kmh = 0.0f;
    };

    std::size_t node_count() const { return positions_.size(); }
    const LonLat& position(std::uint32_t node) const { return positions_[node]; }
    const std::vector<Edge>& edges(std::uint32_t node) const { return adjacency_[node]; }
    std::size_t edge_count() const;

    std::uint32_t add_node(const LonLat& pos);
    void add_edge(std::uint32_t a, std::uint32_t b, double length_m, double speed_kmh);

    /// Nearest node by haversine distance.
    std::uint32_t snap(const LonLat& p) const;

    /// Shortest-path distances (meters) from `source` to every node; entries
    /// beyond `limit_m` stay infinity. By-distance weights.
    std::vector<double> shortest_path_tree(std::uint32_t source,
                                           double limit_m = std::numeric_limits<double>::infinity()) const;

    struct FastestResult {
        double distance_m = 0.0;
        double travel_time_s = 0.0;
        bool reachable = false;
    };

    /// Minimum-travel-time route between two snapped points; reports the
    /// distance along that route as well.
    FastestResult fastest_route(const LonLat& from, const LonLat& to) const;

    void save(const std::filesystem::path& path) const;
    static RoadGraph load(const std::filesystem::path& path);

private:
    std::vector<LonLat> positions_;
    std::vector<std::vector<Edge>> adjacency_;
};

struct ShortestDistanceResult {
    double meters = 0.0;
    bool beeline = false;
};

/// Build the drivable graph from ways tagged `highway`.
RoadGraph build_road_graph(const osm::OsmData& data,
                           const RoadClassTable& classes = RoadClassTable::defaults());
RoadGraph build_road_graph(const std::filesystem::path& osm_file,
                           const RoadClassTable& classes = RoadClassTable::defaults());

/// Snap both endpoints, run Dijkstra; unreachable pairs fall back to the
/// beeline between the raw points.
ShortestDistanceResult shortest_distance(const RoadGraph& graph, const LonLat& from, const LonLat& to);

/// Cell-to-cell distances with per-entry method flag.
class DistanceMatrix {
public:
    enum class Method : std::uint8_t { routed = 0, beeline = 1 };

    DistanceMatrix() = default;
    DistanceMatrix(std::size_t n, double bin_width_m);

    std::size_t size() const { return n_; }
    double bin_width_m() const { return bin_width_m_; }

    double meters(std::size_t from, std::size_t to) const
    {
        return distances_[from * n_ + to];
    }
    Method method(std::size_t from, std::size_t to) const
    {
        const std::size_t bit = from * n_ + to;
        return (methods_[bit >> 3] >> (bit & 7)) & 1 ? Method::beeline : Method::routed;
    }

    void set(std::size_t from, std::size_t to, double meters, Method method);

    void save(const std::filesystem::path& path) const;
    static DistanceMatrix load(const std::filesystem::path& path);

private:
    std::size_t n_ = 0;
    double bin_width_m_ = kDefaultBinWidthM;
    std::vector<float> distances_;
    std::vector<std::uint8_t> methods_;
};

struct MatrixOptions {
    double limit_m = kDefaultDistanceLimitM;
    double bin_width_m = kDefaultBinWidthM;
    unsigned threads = 1;
};

/// One shortest-path-tree sweep per source centroid; targets beyond the
/// limit (or unreached) get the beeline between centroids.
DistanceMatrix distance_matrix(const RoadGraph& graph, const std::vector<LonLat>& centroids,
                               const MatrixOptions& options = {});

/// Bin index of a distance; bins are [k*w, (k+1)*w).
std::size_t digitize_distance(double meters, double bin_width_m = kDefaultBinWidthM);

/// Center of bin k, the distance used in place of members of the bin.
double bin_representative_m(std::size_t bin, double bin_width_m = kDefaultBinWidthM);

} // namespace mobgen::routing
