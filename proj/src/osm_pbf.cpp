#include <fstream>

#include <zlib.h>

#include "fileformat.pb.h"
#include "osmformat.pb.h"

#include "mobgen/errors.hpp"
#include "mobgen/osm.hpp"

namespace mobgen::osm {

namespace {

std::string decompress_blob(const OSMPBF::Blob& blob, const std::string& where)
{
    if (blob.has_raw()) {
        return blob.raw();
    }
    if (blob.has_zlib_data()) {
        if (!blob.has_raw_size() || blob.raw_size() < 0) {
            throw ParseError("zlib blob without raw_size in " + where);
        }
        std::string out(static_cast<std::size_t>(blob.raw_size()), '\0');
        uLongf dest_len = static_cast<uLongf>(out.size());
        int rc = ::uncompress(reinterpret_cast<Bytef*>(out.data()), &dest_len,
                              reinterpret_cast<const Bytef*>(blob.zlib_data().data()),
                              static_cast<uLong>(blob.zlib_data().size()));
        if (rc != Z_OK || dest_len != out.size()) {
            throw ParseError("zlib decompression failed in " + where);
        }
        return out;
    }
    throw ParseError("unsupported blob compression in " + where);
}

class PbfReader {
public:
    explicit PbfReader(const std::filesystem::path& path)
        : in_(path, std::ios::binary), path_(path.string())
    {
        if (!in_) {
            throw IoError("cannot open OSM file: " + path_);
        }
    }

    /// Reads the next (type, payload) blob; false at EOF.
    bool next(std::string& type, std::string& payload)
    {
        std::uint8_t len_be[4];
        if (!in_.read(reinterpret_cast<char*>(len_be), 4)) {
            return false;
        }
        const std::uint32_t header_len = (std::uint32_t(len_be[0]) << 24) | (std::uint32_t(len_be[1]) << 16) |
                                         (std::uint32_t(len_be[2]) << 8) | std::uint32_t(len_be[3]);
        if (header_len == 0 || header_len > (64u << 10)) {
            throw ParseError("implausible PBF blob header size in " + path_);
        }
        std::string header_bytes(header_len, '\0');
        if (!in_.read(header_bytes.data(), header_len)) {
            throw ParseError("truncated PBF blob header in " + path_);
        }
        OSMPBF::BlobHeader header;
        if (!header.ParseFromString(header_bytes)) {
            throw ParseError("malformed PBF blob header in " + path_);
        }
        std::string blob_bytes(static_cast<std::size_t>(header.datasize()), '\0');
        if (!in_.read(blob_bytes.data(), header.datasize())) {
            throw ParseError("truncated PBF blob in " + path_);
        }
        OSMPBF::Blob blob;
        if (!blob.ParseFromString(blob_bytes)) {
            throw ParseError("malformed PBF blob in " + path_);
        }
        type = header.type();
        payload = decompress_blob(blob, path_);
        return true;
    }

private:
    std::ifstream in_;
    std::string path_;
};

Tags decode_tags(const OSMPBF::StringTable& strings,
                 const google::protobuf::RepeatedField<std::uint32_t>& keys,
                 const google::protobuf::RepeatedField<std::uint32_t>& vals)
{
    Tags tags;
    tags.reserve(static_cast<std::size_t>(keys.size()));
    for (int i = 0; i < keys.size() && i < vals.size(); ++i) {
        tags.emplace_back(strings.s(static_cast<int>(keys.Get(i))),
                          strings.s(static_cast<int>(vals.Get(i))));
    }
    return tags;
}

void decode_primitive_block(const OSMPBF::PrimitiveBlock& block, OsmData& data)
{
    const auto& strings = block.stringtable();
    const double gran = 1e-9 * block.granularity();
    const double lat_off = 1e-9 * static_cast<double>(block.lat_offset());
    const double lon_off = 1e-9 * static_cast<double>(block.lon_offset());

    for (const auto& group : block.primitivegroup()) {
        for (const auto& n : group.nodes()) {
            Node node;
            node.id = n.id();
            node.pos = LonLat{lon_off + gran * static_cast<double>(n.lon()),
                              lat_off + gran * static_cast<double>(n.lat())};
            node.tags = decode_tags(strings, n.keys(), n.vals());
            data.nodes.push_back(std::move(node));
        }
        if (group.has_dense()) {
            const auto& dense = group.dense();
            std::int64_t id = 0, lat = 0, lon = 0;
            int kv = 0;
            for (int i = 0; i < dense.id_size(); ++i) {
                id += dense.id(i);
                lat += dense.lat(i);
                lon += dense.lon(i);
                Node node;
                node.id = id;
                node.pos = LonLat{lon_off + gran * static_cast<double>(lon),
                                  lat_off + gran * static_cast<double>(lat)};
                while (kv < dense.keys_vals_size() && dense.keys_vals(kv) != 0) {
                    int k = dense.keys_vals(kv++);
                    if (kv >= dense.keys_vals_size()) {
                        break;
                    }
                    int v = dense.keys_vals(kv++);
                    node.tags.emplace_back(strings.s(k), strings.s(v));
                }
                if (kv < dense.keys_vals_size()) {
                    ++kv; // skip terminating 0
                }
                data.nodes.push_back(std::move(node));
            }
        }
        for (const auto& w : group.ways()) {
            Way way;
            way.id = w.id();
            way.tags = decode_tags(strings, w.keys(), w.vals());
            std::int64_t ref = 0;
            way.refs.reserve(static_cast<std::size_t>(w.refs_size()));
            for (int i = 0; i < w.refs_size(); ++i) {
                ref += w.refs(i);
                way.refs.push_back(ref);
            }
            data.ways.push_back(std::move(way));
        }
        // relations and changesets: not interpreted
    }
}

} // namespace

OsmData read_pbf(const std::filesystem::path& path)
{
    PbfReader reader(path);
    OsmData data;
    std::string type, payload;
    bool saw_header = false;
    while (reader.next(type, payload)) {
        if (type == "OSMHeader") {
            OSMPBF::HeaderBlock header;
            if (!header.ParseFromString(payload)) {
                throw ParseError("malformed OSMHeader in " + path.string());
            }
            for (const auto& feature : header.required_features()) {
                if (feature != "OsmSchema-V0.6" && feature != "DenseNodes") {
                    throw ParseError("unsupported PBF feature '" + feature + "' in " + path.string());
                }
            }
            saw_header = true;
        }
        else if (type == "OSMData") {
            OSMPBF::PrimitiveBlock block;
            if (!block.ParseFromString(payload)) {
                throw ParseError("malformed PrimitiveBlock in " + path.string());
            }
            decode_primitive_block(block, data);
        }
        // unknown blob types are skippable by spec of the container format
    }
    if (!saw_header) {
        throw ParseError("missing OSMHeader blob in " + path.string());
    }
    data.build_index();
    return data;
}

} // namespace mobgen::osm
