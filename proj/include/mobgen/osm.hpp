#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "mobgen/types.hpp"

namespace mobgen::osm {

using Tags = std::vector<std::pair<std::string, std::string>>;

struct Node {
    std::int64_t id = 0;
    LonLat pos;
    Tags tags;
};

struct Way {
    std::int64_t id = 0;
    std::vector<std::int64_t> refs;
    Tags tags;
};

/// In-memory OSM extract: nodes and ways (relations are not interpreted).
struct OsmData {
    std::vector<Node> nodes;
    std::vector<Way> ways;
    std::unordered_map<std::int64_t, std::size_t> node_index;

    void build_index();
    const Node* find_node(std::int64_t id) const;
};

const std::string* find_tag(const Tags& tags, std::string_view key);

/// Read an OSM file; format detected from content (XML vs PBF framing).
OsmData read_file(const std::filesystem::path& path);

OsmData read_xml(const std::filesystem::path& path);
OsmData read_pbf(const std::filesystem::path& path);

} // namespace mobgen::osm
