/*
 * Copyright (c) 2026, The geochip Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <compare>
#include <string>

namespace geochip {

/// WGS84 ellipsoid; the only datum supported.
struct Wgs84 {
    static constexpr double a = 6378137.0;
    static constexpr double f = 1.0 / 298.257223563;
};

/// An EPSG code from the supported set: 4326, 3395, 326xx and 327xx (UTM
/// WGS84 zones 1..60). Only constructible through from_epsg.
class CrsCode {
public:
    enum class Kind { Geographic, WorldMercator, Utm };

    /// Throws Error(UnsupportedCrs) for codes outside the supported set.
    static CrsCode from_epsg(int epsg);
    static bool is_supported(int epsg) noexcept;

    static CrsCode wgs84() { return CrsCode(4326); }
    static CrsCode world_mercator() { return CrsCode(3395); }
    static CrsCode utm(int zone, bool south);

    int epsg() const noexcept { return epsg_; }
    Kind kind() const noexcept;
    bool is_geographic() const noexcept { return epsg_ == 4326; }

    /// 1..60 for UTM codes, 0 otherwise.
    int utm_zone() const noexcept;
    bool utm_south() const noexcept { return epsg_ > 32700; }
    /// Central meridian in degrees (UTM only).
    double central_meridian() const noexcept;

    std::string name() const;

    friend bool operator==(CrsCode, CrsCode) = default;

private:
    explicit CrsCode(int epsg) : epsg_(epsg) {}
    int epsg_;
};

struct XY {
    double x = 0;
    double y = 0;
};

/// North-up affine pixel -> CRS mapping.
struct GeoTransform {
    double origin_x = 0;
    double origin_y = 0;
    double pixel_w = 1;   // > 0
    double pixel_h = -1;  // < 0

    /// Throws Error(InvalidArgument) unless pixel_w > 0 and pixel_h < 0.
    void validate() const;

    friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

XY apply_geotransform(const GeoTransform& gt, double col, double row) noexcept;
/// Returns (col, row) for a CRS position.
XY invert_geotransform(const GeoTransform& gt, double x, double y) noexcept;

struct BoundingBox {
    double minx = 0;
    double maxx = 0;
    double miny = 0;
    double maxy = 0;
    CrsCode crs = CrsCode::wgs84();

    /// minx < maxx and miny < maxy.
    bool valid() const noexcept { return minx < maxx && miny < maxy; }
    double width() const noexcept { return maxx - minx; }
    double height() const noexcept { return maxy - miny; }
    bool intersects(const BoundingBox& o) const noexcept {
        return minx < o.maxx && o.minx < maxx && miny < o.maxy && o.miny < maxy;
    }
    bool contains(double x, double y) const noexcept {
        return x >= minx && x <= maxx && y >= miny && y <= maxy;
    }
    bool contains(const BoundingBox& o) const noexcept {
        return o.minx >= minx && o.maxx <= maxx && o.miny >= miny && o.maxy <= maxy;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox hull(const BoundingBox& a, const BoundingBox& b);
/// Box intersection; the result may be invalid (empty) when a and b do not overlap.
BoundingBox intersection(const BoundingBox& a, const BoundingBox& b);

/// Geographic (degrees) -> projected (meters). Identity for EPSG:4326.
/// Throws Error(OutOfDomain) for |lat| > 84 on projected CRSs or a longitude
/// more than 30 degrees from a UTM central meridian.
XY forward_project(CrsCode crs, double lon, double lat);

/// Projected -> geographic; same domain rules as forward_project.
XY inverse_project(CrsCode crs, double x, double y);

/// inverse_project(src) then forward_project(dst). Exact identity when src == dst.
XY transform_point(CrsCode src, CrsCode dst, double x, double y);

/// Axis-aligned hull in dst of the image of b. Each edge is sampled at
/// densify_n interior points plus the corners; the hull is widened by the
/// largest chord deviation seen between samples so it stays conservative.
BoundingBox reproject_bbox(const BoundingBox& b, CrsCode dst, int densify_n);

}  // namespace geochip
