#include "mobgen/geo.hpp"

#include <cmath>

namespace mobgen::geo {

namespace {

constexpr double kDeg2Rad = 3.14159265358979323846 / 180.0;
constexpr double kRad2Deg = 180.0 / 3.14159265358979323846;

} // namespace

double haversine_m(const LonLat& a, const LonLat& b)
{
    const double lat1 = a.lat * kDeg2Rad;
    const double lat2 = b.lat * kDeg2Rad;
    const double dlat = lat2 - lat1;
    const double dlon = (b.lon - a.lon) * kDeg2Rad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

Projection::Projection(const LonLat& center) : center_(center)
{
    sin_lat0_ = std::sin(center.lat * kDeg2Rad);
    cos_lat0_ = std::cos(center.lat * kDeg2Rad);
}

XY Projection::project(const LonLat& p) const
{
    const double lat = p.lat * kDeg2Rad;
    const double dlon = (p.lon - center_.lon) * kDeg2Rad;
    const double sin_lat = std::sin(lat);
    const double cos_lat = std::cos(lat);
    const double denom = 1.0 + sin_lat0_ * sin_lat + cos_lat0_ * cos_lat * std::cos(dlon);
    // Antipode of the projection center; cannot occur for model-scale areas.
    const double k = std::sqrt(2.0 / std::max(denom, 1e-12));
    const double x = kEarthRadiusM * k * cos_lat * std::sin(dlon);
    const double y = kEarthRadiusM * k * (cos_lat0_ * sin_lat - sin_lat0_ * cos_lat * std::cos(dlon));
    return XY{x, y};
}

LonLat Projection::unproject(const XY& p) const
{
    const double rho = std::hypot(p.x(), p.y());
    if (rho < 1e-9) {
        return center_;
    }
    const double c = 2.0 * std::asin(std::min(1.0, rho / (2.0 * kEarthRadiusM)));
    const double sin_c = std::sin(c);
    const double cos_c = std::cos(c);
    const double lat = std::asin(cos_c * sin_lat0_ + p.y() * sin_c * cos_lat0_ / rho);
    const double lon = center_.lon * kDeg2Rad +
                       std::atan2(p.x() * sin_c, rho * cos_lat0_ * cos_c - p.y() * sin_lat0_ * sin_c);
    return LonLat{lon * kRad2Deg, lat * kRad2Deg};
}

AreaGeometry::AreaGeometry(MultiPolygon lonlat_polygons, Role role)
    : AreaGeometry(lonlat_polygons, lonlat_polygons, role)
{
}

AreaGeometry::AreaGeometry(MultiPolygon lonlat_polygons, MultiPolygon focus, Role role)
    : polygons_(std::move(lonlat_polygons)), focus_(std::move(focus)), role_(role)
{
    bg::correct(polygons_);
    bg::correct(focus_);
    projection_ = Projection(centroid_lonlat(focus_.empty() ? polygons_ : focus_));
    projected_ = project_all(polygons_, projection_);
    focus_projected_ = project_all(focus_, projection_);
}

bool AreaGeometry::contains(const LonLat& p) const
{
    return bg::covered_by(XY{p.lon, p.lat}, polygons_);
}

bool AreaGeometry::focus_contains(const LonLat& p) const
{
    return bg::covered_by(XY{p.lon, p.lat}, focus_);
}

bool AreaGeometry::intersects_lonlat(const MultiPolygon& geometry) const
{
    return bg::intersects(geometry, polygons_);
}

double AreaGeometry::area_m2() const
{
    return bg::area(projected_);
}

double AreaGeometry::distance_to_focus_m(const LonLat& p) const
{
    return bg::distance(projection_.project(p), focus_projected_);
}

AreaGeometry AreaGeometry::buffered(double dist_m) const
{
    if (dist_m < 0.0) {
        throw ArgumentError("buffer distance must be non-negative");
    }
    if (dist_m == 0.0) {
        AreaGeometry copy = *this;
        copy.role_ = Role::focus_plus_buffer;
        return copy;
    }

    namespace bs = bg::strategy::buffer;
    const int points_per_circle = 72;
    bs::distance_symmetric<double> distance(dist_m);
    bs::join_round join(points_per_circle);
    bs::end_round end(points_per_circle);
    bs::point_circle circle(points_per_circle);
    bs::side_straight side;

    MultiPolygon dilated;
    bg::buffer(projected_, dilated, distance, side, join, end, circle);

    MultiPolygon lonlat;
    for (const auto& poly : dilated) {
        Polygon p;
        for (const auto& v : poly.outer()) {
            LonLat ll = projection_.unproject(v);
            bg::append(p.outer(), XY{ll.lon, ll.lat});
        }
        p.inners().resize(poly.inners().size());
        for (std::size_t i = 0; i < poly.inners().size(); ++i) {
            for (const auto& v : poly.inners()[i]) {
                LonLat ll = projection_.unproject(v);
                bg::append(p.inners()[i], XY{ll.lon, ll.lat});
            }
        }
        bg::correct(p);
        lonlat.push_back(std::move(p));
    }
    return AreaGeometry(std::move(lonlat), focus_, Role::focus_plus_buffer);
}

Box AreaGeometry::bounding_box_lonlat() const
{
    Box box;
    bg::envelope(polygons_, box);
    return box;
}

MultiPolygon union_all(const std::vector<Polygon>& polygons)
{
    MultiPolygon acc;
    for (const auto& poly : polygons) {
        Polygon p = poly;
        bg::correct(p);
        if (acc.empty()) {
            acc.push_back(p);
            continue;
        }
        MultiPolygon merged;
        bg::union_(acc, p, merged);
        acc = std::move(merged);
    }
    return acc;
}

MultiPolygon project_all(const MultiPolygon& lonlat, const Projection& proj)
{
    MultiPolygon out;
    out.reserve(lonlat.size());
    for (const auto& poly : lonlat) {
        Polygon p;
        for (const auto& v : poly.outer()) {
            bg::append(p.outer(), proj.project(LonLat{v.x(), v.y()}));
        }
        p.inners().resize(poly.inners().size());
        for (std::size_t i = 0; i < poly.inners().size(); ++i) {
            for (const auto& v : poly.inners()[i]) {
                bg::append(p.inners()[i], proj.project(LonLat{v.x(), v.y()}));
            }
        }
        bg::correct(p);
        out.push_back(std::move(p));
    }
    return out;
}

double polygon_area_m2(const Polygon& lonlat)
{
    MultiPolygon mp{lonlat};
    Projection proj(centroid_lonlat(mp));
    return bg::area(project_all(mp, proj));
}

LonLat centroid_lonlat(const MultiPolygon& mp)
{
    if (mp.empty()) {
        return LonLat{0.0, 0.0};
    }
    XY c{0.0, 0.0};
    bg::centroid(mp, c);
    return LonLat{c.x(), c.y()};
}

} // namespace mobgen::geo
