#pragma once

#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/geometries.hpp>
#include <boost/geometry/geometries/point_xy.hpp>

#include "mobgen/types.hpp"

namespace mobgen::geo {

namespace bg = boost::geometry;

/// Planar point, meters in a local projection (or raw lon/lat where noted).
using XY = bg::model::d2::point_xy<double>;
using Ring = bg::model::ring<XY>;
using Polygon = bg::model::polygon<XY>;
using MultiPolygon = bg::model::multi_polygon<Polygon>;
using Linestring = bg::model::linestring<XY>;
using Box = bg::model::box<XY>;

inline constexpr double kEarthRadiusM = 6371008.8;

/// Great-circle distance in meters.
double haversine_m(const LonLat& a, const LonLat& b);

/// Lambert azimuthal equal-area projection on the sphere, centered on a
/// reference point. Gives metric x/y with negligible distortion at the
/// model-area scales we care about.
class Projection {
public:
    Projection() : Projection(LonLat{0.0, 0.0}) {}
    explicit Projection(const LonLat& center);

    LonLat center() const { return center_; }

    XY project(const LonLat& p) const;
    LonLat unproject(const XY& p) const;

private:
    LonLat center_;
    double sin_lat0_ = 0.0;
    double cos_lat0_ = 1.0;
};

/// Focus or focus+buffer geometry. Polygon edges follow GeoJSON semantics
/// (straight lines in lon/lat); metric operations run in a local projection
/// centered on the geometry.
class AreaGeometry {
public:
    enum class Role { focus, focus_plus_buffer };

    AreaGeometry() = default;
    AreaGeometry(MultiPolygon lonlat_polygons, Role role);

    Role role() const { return role_; }
    const MultiPolygon& polygons() const { return polygons_; }

    /// The un-buffered focus geometry (equals polygons() for Role::focus).
    const MultiPolygon& focus_polygons() const { return focus_; }

    const Projection& projection() const { return projection_; }

    bool contains(const LonLat& p) const;
    bool focus_contains(const LonLat& p) const;
    bool intersects_lonlat(const MultiPolygon& geometry) const;

    /// Area in square meters (local equal-area projection).
    double area_m2() const;

    /// Meters from a point to the focus boundary; 0 if inside the focus.
    double distance_to_focus_m(const LonLat& p) const;

    /// Dilate by `dist_m` meters. dist_m == 0 returns an identical geometry.
    /// The original focus geometry is retained for in-focus tagging.
    AreaGeometry buffered(double dist_m) const;

    Box bounding_box_lonlat() const;

private:
    AreaGeometry(MultiPolygon lonlat_polygons, MultiPolygon focus, Role role);

    MultiPolygon polygons_;
    MultiPolygon focus_;
    Role role_ = Role::focus;
    Projection projection_;
    MultiPolygon projected_;       // polygons_ in local metric coordinates
    MultiPolygon focus_projected_; // focus_ in local metric coordinates
};

/// Union of polygons in lon/lat space.
MultiPolygon union_all(const std::vector<Polygon>& polygons);

/// Project every vertex of a lon/lat multipolygon.
MultiPolygon project_all(const MultiPolygon& lonlat, const Projection& proj);

/// Area in m2 of a lon/lat polygon using a projection centered on itself.
double polygon_area_m2(const Polygon& lonlat);

/// Centroid of a lon/lat multipolygon.
LonLat centroid_lonlat(const MultiPolygon& mp);

} // namespace mobgen::geo
