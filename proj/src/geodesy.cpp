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
#include "geochip/geodesy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "geochip/error.hpp"

namespace geochip {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kMaxProjectedLat = 84.0;
constexpr double kMaxUtmLonOffset = 30.0;
constexpr double kUtmScale = 0.9996;
constexpr double kUtmFalseEasting = 500000.0;
constexpr double kUtmFalseNorthingSouth = 10000000.0;
// Slack on the inverse-side domain checks so that forward images of boundary
// points invert without tripping the limit.
constexpr double kDomainSlackDeg = 1e-9;

struct Ellipsoid {
    double a;
    double es;  // e^2
    double e;
    double n;   // third flattening
};

constexpr Ellipsoid make_wgs84() {
    const double f = Wgs84::f;
    const double es = f * (2 - f);
    return {Wgs84::a, es, 0.0, f / (2 - f)};
}

const Ellipsoid& wgs84() {
    static const Ellipsoid ell = [] {
        Ellipsoid e = make_wgs84();
        e.e = std::sqrt(e.es);
        return e;
    }();
    return ell;
}

// tan(conformal latitude) from tan(geodetic latitude).
double taupf(double tau, double e) {
    const double tau1 = std::hypot(1.0, tau);
    const double sig = std::sinh(e * std::atanh(e * tau / tau1));
    return std::hypot(1.0, sig) * tau - sig * tau1;
}

// Inverse of taupf by Newton iteration.
double tauf(double taup, double e) {
    const double e2m = 1 - e * e;
    constexpr int kMaxIter = 8;
    const double tol = std::sqrt(std::numeric_limits<double>::epsilon()) / 10;
    double tau = std::abs(taup) > 70 ? taup * std::exp(e * std::atanh(e)) : taup / e2m;
    for (int i = 0; i < kMaxIter; ++i) {
        const double taupa = taupf(tau, e);
        const double dtau = (taup - taupa) * (1 + e2m * tau * tau) /
                            (e2m * std::hypot(1.0, tau) * std::hypot(1.0, taupa));
        tau += dtau;
        if (!(std::abs(dtau) >= tol * std::max(1.0, std::abs(tau)))) break;
    }
    return tau;
}

// Krueger series coefficients in the third flattening n, to order n^6.
struct KruegerSeries {
    double rectifying_radius;            // A
    std::array<double, 6> alpha;         // conformal -> rectifying (forward)
    std::array<double, 6> beta;          // rectifying -> conformal (inverse)
};

const KruegerSeries& krueger() {
    static const KruegerSeries s = [] {
        const double n = wgs84().n;
        const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
        KruegerSeries k{};
        k.rectifying_radius = wgs84().a / (1 + n) * (1 + n2 / 4 + n4 / 64 + n6 / 256);
        k.alpha = {
            n / 2 - 2 * n2 / 3 + 5 * n3 / 16 + 41 * n4 / 180 - 127 * n5 / 288 + 7891 * n6 / 37800,
            13 * n2 / 48 - 3 * n3 / 5 + 557 * n4 / 1440 + 281 * n5 / 630 - 1983433 * n6 / 1935360,
            61 * n3 / 240 - 103 * n4 / 140 + 15061 * n5 / 26880 + 167603 * n6 / 181440,
            49561 * n4 / 161280 - 179 * n5 / 168 + 6601661 * n6 / 7257600,
            34729 * n5 / 80640 - 3418889 * n6 / 1995840,
            212378941 * n6 / 319334400,
        };
        k.beta = {
            n / 2 - 2 * n2 / 3 + 37 * n3 / 96 - n4 / 360 - 81 * n5 / 512 + 96199 * n6 / 604800,
            n2 / 48 + n3 / 15 - 437 * n4 / 1440 + 46 * n5 / 105 - 1118711 * n6 / 3870720,
            17 * n3 / 480 - 37 * n4 / 840 - 209 * n5 / 4480 + 5569 * n6 / 90720,
            4397 * n4 / 161280 - 11 * n5 / 504 - 830251 * n6 / 7257600,
            4583 * n5 / 161280 - 108847 * n6 / 3991680,
            20648693 * n6 / 638668800,
        };
        return k;
    }();
    return s;
}

[[noreturn]] void out_of_domain(const std::string& what) {
    throw Error(ErrorCode::OutOfDomain, what);
}

// Longitude difference normalised to (-180, 180].
double lon_offset(double lon, double cm) {
    double d = std::remainder(lon - cm, 360.0);
    if (d == -180.0) d = 180.0;
    return d;
}

void check_geographic(double lon, double lat, double lat_limit, double slack) {
    if (!std::isfinite(lon) || !std::isfinite(lat) || std::abs(lon) > 180.0 + slack)
        out_of_domain(fmt::format("longitude {} outside [-180, 180]", lon));
    if (std::abs(lat) > lat_limit + slack)
        out_of_domain(fmt::format("latitude {} beyond +/-{}", lat, lat_limit));
}

XY tm_forward(double dlon_deg, double lat_deg) {
    const auto& k = krueger();
    const double e = wgs84().e;
    const double lam = dlon_deg * kDeg;
    const double phi = lat_deg * kDeg;
    const double taup = taupf(std::tan(phi), e);
    const double xip = std::atan2(taup, std::cos(lam));
    const double etap = std::asinh(std::sin(lam) / std::hypot(taup, std::cos(lam)));
    double xi = xip;
    double eta = etap;
    for (int j = 1; j <= 6; ++j) {
        xi += k.alpha[j - 1] * std::sin(2 * j * xip) * std::cosh(2 * j * etap);
        eta += k.alpha[j - 1] * std::cos(2 * j * xip) * std::sinh(2 * j * etap);
    }
    return {kUtmScale * k.rectifying_radius * eta, kUtmScale * k.rectifying_radius * xi};
}

XY tm_inverse(double x, double y) {
    const auto& k = krueger();
    const double e = wgs84().e;
    const double xi = y / (kUtmScale * k.rectifying_radius);
    const double eta = x / (kUtmScale * k.rectifying_radius);
    double xip = xi;
    double etap = eta;
    for (int j = 1; j <= 6; ++j) {
        xip -= k.beta[j - 1] * std::sin(2 * j * xi) * std::cosh(2 * j * eta);
        etap -= k.beta[j - 1] * std::cos(2 * j * xi) * std::sinh(2 * j * eta);
    }
    const double s = std::sinh(etap);
    const double c = std::max(0.0, std::cos(xip));
    const double r = std::hypot(s, c);
    double lam = 0;
    double phi = 0;
    if (r != 0) {
        lam = std::atan2(s, c);
        phi = std::atan(tauf(std::sin(xip) / r, e));
    } else {
        phi = std::copysign(std::numbers::pi / 2, xip);
    }
    return {lam / kDeg, phi / kDeg};
}

}  // namespace

// -- CrsCode -----------------------------------------------------------------

bool CrsCode::is_supported(int epsg) noexcept {
    return epsg == 4326 || epsg == 3395 || (epsg >= 32601 && epsg <= 32660) ||
           (epsg >= 32701 && epsg <= 32760);
}

CrsCode CrsCode::from_epsg(int epsg) {
    if (!is_supported(epsg))
        throw Error(ErrorCode::UnsupportedCrs, fmt::format("EPSG:{} is not supported", epsg));
    return CrsCode(epsg);
}

CrsCode CrsCode::utm(int zone, bool south) {
    if (zone < 1 || zone > 60)
        throw Error(ErrorCode::UnsupportedCrs, fmt::format("UTM zone {} out of range", zone));
    return CrsCode((south ? 32700 : 32600) + zone);
}

CrsCode::Kind CrsCode::kind() const noexcept {
    if (epsg_ == 4326) return Kind::Geographic;
    if (epsg_ == 3395) return Kind::WorldMercator;
    return Kind::Utm;
}

int CrsCode::utm_zone() const noexcept {
    return kind() == Kind::Utm ? epsg_ % 100 : 0;
}

double CrsCode::central_meridian() const noexcept {
    return utm_zone() * 6.0 - 183.0;
}

std::string CrsCode::name() const {
    return fmt::format("EPSG:{}", epsg_);
}

// -- GeoTransform --------------------------------------------------------------

void GeoTransform::validate() const {
    if (!(pixel_w > 0) || !(pixel_h < 0) || !std::isfinite(origin_x) || !std::isfinite(origin_y))
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("geotransform must be north-up (pixel_w={}, pixel_h={})",
                                pixel_w, pixel_h));
}

XY apply_geotransform(const GeoTransform& gt, double col, double row) noexcept {
    return {gt.origin_x + col * gt.pixel_w, gt.origin_y + row * gt.pixel_h};
}

XY invert_geotransform(const GeoTransform& gt, double x, double y) noexcept {
    return {(x - gt.origin_x) / gt.pixel_w, (y - gt.origin_y) / gt.pixel_h};
}

// -- BoundingBox ---------------------------------------------------------------

BoundingBox hull(const BoundingBox& a, const BoundingBox& b) {
    return {std::min(a.minx, b.minx), std::max(a.maxx, b.maxx), std::min(a.miny, b.miny),
            std::max(a.maxy, b.maxy), a.crs};
}

BoundingBox intersection(const BoundingBox& a, const BoundingBox& b) {
    return {std::max(a.minx, b.minx), std::min(a.maxx, b.maxx), std::max(a.miny, b.miny),
            std::min(a.maxy, b.maxy), a.crs};
}

// -- projections ---------------------------------------------------------------

XY forward_project(CrsCode crs, double lon, double lat) {
    switch (crs.kind()) {
    case CrsCode::Kind::Geographic:
        check_geographic(lon, lat, 90.0, 0.0);
        return {lon, lat};
    case CrsCode::Kind::WorldMercator: {
        check_geographic(lon, lat, kMaxProjectedLat, 0.0);
        const auto& ell = wgs84();
        return {ell.a * lon * kDeg, ell.a * std::asinh(taupf(std::tan(lat * kDeg), ell.e))};
    }
    case CrsCode::Kind::Utm: {
        check_geographic(lon, lat, kMaxProjectedLat, 0.0);
        const double dlon = lon_offset(lon, crs.central_meridian());
        if (std::abs(dlon) > kMaxUtmLonOffset)
            out_of_domain(fmt::format("longitude {} is {} deg from the {} central meridian", lon,
                                      dlon, crs.name()));
        const XY tm = tm_forward(dlon, lat);
        return {tm.x + kUtmFalseEasting, tm.y + (crs.utm_south() ? kUtmFalseNorthingSouth : 0.0)};
    }
    }
    return {};
}

XY inverse_project(CrsCode crs, double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y))
        out_of_domain("non-finite projected coordinate");
    switch (crs.kind()) {
    case CrsCode::Kind::Geographic:
        check_geographic(x, y, 90.0, 0.0);
        return {x, y};
    case CrsCode::Kind::WorldMercator: {
        const auto& ell = wgs84();
        const double lon = x / ell.a / kDeg;
        const double lat = std::atan(tauf(std::sinh(y / ell.a), ell.e)) / kDeg;
        check_geographic(lon, lat, kMaxProjectedLat, kDomainSlackDeg);
        return {lon, lat};
    }
    case CrsCode::Kind::Utm: {
        const double northing = y - (crs.utm_south() ? kUtmFalseNorthingSouth : 0.0);
        const XY ll = tm_inverse(x - kUtmFalseEasting, northing);
        if (std::abs(ll.x) > kMaxUtmLonOffset + kDomainSlackDeg)
            out_of_domain(fmt::format("({}, {}) lies {} deg from the {} central meridian", x, y,
                                      ll.x, crs.name()));
        double lon = crs.central_meridian() + ll.x;
        if (lon > 180.0) lon -= 360.0;
        if (lon < -180.0) lon += 360.0;
        check_geographic(lon, ll.y, kMaxProjectedLat, kDomainSlackDeg);
        return {lon, ll.y};
    }
    }
    return {};
}

XY transform_point(CrsCode src, CrsCode dst, double x, double y) {
    if (src == dst) return {x, y};
    const XY ll = inverse_project(src, x, y);
    return forward_project(dst, ll.x, ll.y);
}

BoundingBox reproject_bbox(const BoundingBox& b, CrsCode dst, int densify_n) {
    if (densify_n < 1)
        throw Error(ErrorCode::InvalidArgument, "densify_n must be >= 1");
    if (b.crs == dst) return b;

    // Boundary walk: 4 edges, each split into densify_n + 1 segments.
    const int segments = densify_n + 1;
    const std::array<XY, 4> corners{XY{b.minx, b.maxy}, XY{b.maxx, b.maxy}, XY{b.maxx, b.miny},
                                    XY{b.minx, b.miny}};
    BoundingBox out{std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity(),
                    -std::numeric_limits<double>::infinity(), dst};
    double pad_x = 0;
    double pad_y = 0;
    auto extend = [&](const XY& p) {
        out.minx = std::min(out.minx, p.x);
        out.maxx = std::max(out.maxx, p.x);
        out.miny = std::min(out.miny, p.y);
        out.maxy = std::max(out.maxy, p.y);
    };
    for (int edge = 0; edge < 4; ++edge) {
        const XY& p0 = corners[edge];
        const XY& p1 = corners[(edge + 1) % 4];
        XY prev = transform_point(b.crs, dst, p0.x, p0.y);
        extend(prev);
        for (int s = 1; s <= segments; ++s) {
            const double t = static_cast<double>(s) / segments;
            const double tm = (s - 0.5) / segments;
            const XY cur = transform_point(b.crs, dst, p0.x + t * (p1.x - p0.x),
                                           p0.y + t * (p1.y - p0.y));
            const XY mid = transform_point(b.crs, dst, p0.x + tm * (p1.x - p0.x),
                                           p0.y + tm * (p1.y - p0.y));
            extend(cur);
            extend(mid);
            pad_x = std::max(pad_x, std::abs(mid.x - 0.5 * (prev.x + cur.x)));
            pad_y = std::max(pad_y, std::abs(mid.y - 0.5 * (prev.y + cur.y)));
            prev = cur;
        }
    }
    out.minx -= pad_x;
    out.maxx += pad_x;
    out.miny -= pad_y;
    out.maxy += pad_y;
    if (!out.valid())
        out_of_domain("reprojected box is degenerate");
    return out;
}

}  // namespace geochip
