#include <charconv>
#include <cstring>
#include <fstream>

#include "mobgen/errors.hpp"
#include "mobgen/osm.hpp"
#include "mobgen/util.hpp"

// Minimal parser for the flat OSM XML dialect (osm > node|way|relation >
// tag|nd). Machine-generated files only; no CDATA, no nested markup.

namespace mobgen::osm {

namespace {

struct Attr {
    std::string_view name;
    std::string value;
};

std::string decode_entities(std::string_view raw)
{
    if (raw.find('&') == std::string_view::npos) {
        return std::string(raw);
    }
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size();) {
        if (raw[i] != '&') {
            out += raw[i++];
            continue;
        }
        std::size_t semi = raw.find(';', i);
        if (semi == std::string_view::npos) {
            out += raw[i++];
            continue;
        }
        std::string_view ent = raw.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            int code = 0;
            const char* first = ent.data() + 1;
            const char* last = ent.data() + ent.size();
            if (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X')) {
                std::from_chars(first + 1, last, code, 16);
            }
            else {
                std::from_chars(first, last, code, 10);
            }
            if (code > 0 && code < 128) {
                out += static_cast<char>(code);
            }
        }
        i = semi + 1;
    }
    return out;
}

class XmlScanner {
public:
    explicit XmlScanner(std::string text) : text_(std::move(text)) {}

    /// Advance to the next element start tag; false at end of input.
    /// Fills `name`, `attrs` and `self_closing`; closing tags are skipped.
    bool next_element(std::string_view& name, std::vector<Attr>& attrs, bool& self_closing)
    {
        for (;;) {
            std::size_t lt = text_.find('<', pos_);
            if (lt == std::string::npos) {
                return false;
            }
            pos_ = lt + 1;
            if (starts_with("!--")) {
                std::size_t end = text_.find("-->", pos_);
                if (end == std::string::npos) {
                    throw ParseError("unterminated XML comment");
                }
                pos_ = end + 3;
                continue;
            }
            if (starts_with("?") || starts_with("!")) {
                std::size_t end = text_.find('>', pos_);
                if (end == std::string::npos) {
                    throw ParseError("unterminated XML declaration");
                }
                pos_ = end + 1;
                continue;
            }
            if (starts_with("/")) { // closing tag
                std::size_t end = text_.find('>', pos_);
                if (end == std::string::npos) {
                    throw ParseError("unterminated closing tag");
                }
                name = trim(std::string_view(text_).substr(pos_ + 1, end - pos_ - 1));
                pos_ = end + 1;
                attrs.clear();
                self_closing = false;
                closing_ = true;
                return true;
            }
            return parse_start_tag(name, attrs, self_closing);
        }
    }

    bool last_was_closing() const { return closing_; }

private:
    bool starts_with(std::string_view s) const
    {
        return text_.compare(pos_, s.size(), s) == 0;
    }

    static std::string_view trim(std::string_view s)
    {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    }

    bool parse_start_tag(std::string_view& name, std::vector<Attr>& attrs, bool& self_closing)
    {
        closing_ = false;
        attrs.clear();
        std::size_t i = pos_;
        const std::string& t = text_;
        std::size_t name_begin = i;
        while (i < t.size() && !std::isspace(static_cast<unsigned char>(t[i])) && t[i] != '>' && t[i] != '/') {
            ++i;
        }
        name = std::string_view(t).substr(name_begin, i - name_begin);
        for (;;) {
            while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) {
                ++i;
            }
            if (i >= t.size()) {
                throw ParseError("unterminated start tag");
            }
            if (t[i] == '>') {
                self_closing = false;
                pos_ = i + 1;
                return true;
            }
            if (t[i] == '/') {
                if (i + 1 >= t.size() || t[i + 1] != '>') {
                    throw ParseError("malformed tag end");
                }
                self_closing = true;
                pos_ = i + 2;
                return true;
            }
            std::size_t an = i;
            while (i < t.size() && t[i] != '=' && !std::isspace(static_cast<unsigned char>(t[i]))) {
                ++i;
            }
            std::string_view aname = std::string_view(t).substr(an, i - an);
            while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
            if (i >= t.size() || t[i] != '=') {
                throw ParseError("attribute without value: " + std::string(aname));
            }
            ++i;
            while (i < t.size() && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
            if (i >= t.size() || (t[i] != '"' && t[i] != '\'')) {
                throw ParseError("unquoted attribute value: " + std::string(aname));
            }
            char quote = t[i++];
            std::size_t vb = i;
            while (i < t.size() && t[i] != quote) {
                ++i;
            }
            if (i >= t.size()) {
                throw ParseError("unterminated attribute value: " + std::string(aname));
            }
            attrs.push_back(Attr{aname, decode_entities(std::string_view(t).substr(vb, i - vb))});
            ++i;
        }
    }

    std::string text_;
    std::size_t pos_ = 0;
    bool closing_ = false;
};

const std::string* attr_value(const std::vector<Attr>& attrs, std::string_view name)
{
    for (const auto& a : attrs) {
        if (a.name == name) {
            return &a.value;
        }
    }
    return nullptr;
}

double parse_double(const std::string& s, std::string_view what)
{
    try {
        return std::stod(s);
    }
    catch (const std::exception&) {
        throw ParseError("bad numeric value for " + std::string(what) + ": '" + s + "'");
    }
}

std::int64_t parse_i64(const std::string& s, std::string_view what)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ParseError("bad integer value for " + std::string(what) + ": '" + s + "'");
    }
    return v;
}

} // namespace

OsmData read_xml(const std::filesystem::path& path)
{
    XmlScanner scanner(util::read_file(path));

    OsmData data;
    std::string_view name;
    std::vector<Attr> attrs;
    bool self_closing = false;

    enum class Context { top, node, way, relation };
    Context ctx = Context::top;
    Node current_node;
    Way current_way;
    bool saw_osm_root = false;

    while (scanner.next_element(name, attrs, self_closing)) {
        if (scanner.last_was_closing()) {
            if (name == "node" && ctx == Context::node) {
                data.nodes.push_back(std::move(current_node));
                ctx = Context::top;
            }
            else if (name == "way" && ctx == Context::way) {
                data.ways.push_back(std::move(current_way));
                ctx = Context::top;
            }
            else if (name == "relation") {
                ctx = Context::top;
            }
            continue;
        }
        if (name == "osm") {
            saw_osm_root = true;
        }
        else if (name == "node") {
            const std::string* id = attr_value(attrs, "id");
            const std::string* lat = attr_value(attrs, "lat");
            const std::string* lon = attr_value(attrs, "lon");
            if (!id || !lat || !lon) {
                throw ParseError("node without id/lat/lon in " + path.string());
            }
            current_node = Node{};
            current_node.id = parse_i64(*id, "node id");
            current_node.pos = LonLat{parse_double(*lon, "lon"), parse_double(*lat, "lat")};
            if (self_closing) {
                data.nodes.push_back(std::move(current_node));
            }
            else {
                ctx = Context::node;
            }
        }
        else if (name == "way") {
            const std::string* id = attr_value(attrs, "id");
            if (!id) {
                throw ParseError("way without id in " + path.string());
            }
            current_way = Way{};
            current_way.id = parse_i64(*id, "way id");
            if (self_closing) {
                data.ways.push_back(std::move(current_way));
            }
            else {
                ctx = Context::way;
            }
        }
        else if (name == "relation") {
            if (!self_closing) {
                ctx = Context::relation;
            }
        }
        else if (name == "tag") {
            const std::string* k = attr_value(attrs, "k");
            const std::string* v = attr_value(attrs, "v");
            if (k && v) {
                if (ctx == Context::node) {
                    current_node.tags.emplace_back(*k, *v);
                }
                else if (ctx == Context::way) {
                    current_way.tags.emplace_back(*k, *v);
                }
            }
        }
        else if (name == "nd" && ctx == Context::way) {
            const std::string* ref = attr_value(attrs, "ref");
            if (ref) {
                current_way.refs.push_back(parse_i64(*ref, "nd ref"));
            }
        }
        // bounds, member, etc.: ignored
    }
    if (!saw_osm_root) {
        throw ParseError("not an OSM XML file: " + path.string());
    }
    data.build_index();
    return data;
}

} // namespace mobgen::osm
