#include "mobgen/osm.hpp"

#include <fstream>

#include "mobgen/errors.hpp"

namespace mobgen::osm {

void OsmData::build_index()
{
    node_index.clear();
    node_index.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        node_index.emplace(nodes[i].id, i);
    }
}

const Node* OsmData::find_node(std::int64_t id) const
{
    auto it = node_index.find(id);
    return it == node_index.end() ? nullptr : &nodes[it->second];
}

const std::string* find_tag(const Tags& tags, std::string_view key)
{
    for (const auto& [k, v] : tags) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

OsmData read_file(const std::filesystem::path& path)
{
    std::ifstream probe(path, std::ios::binary);
    if (!probe) {
        throw IoError("cannot open OSM file: " + path.string());
    }
    // XML files start with '<' (after optional whitespace/BOM); PBF starts
    // with a big-endian blob-header length.
    char c = '\0';
    while (probe.get(c)) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            break;
        }
    }
    probe.close();
    if (c == '<') {
        return read_xml(path);
    }
    return read_pbf(path);
}

} // namespace mobgen::osm
