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
#include <cmath>
#include <fstream>

#include <doctest.h>
#include <json.hpp>

#include "geochip/error.hpp"
#include "geochip/geodesy.hpp"
#include "geochip/random.hpp"
#include "support.hpp"

using namespace geochip;
using nlohmann::json;

namespace {

json oracle() {
    std::ifstream in(testing::fixtures_dir() / "geodesy_oracle.json");
    REQUIRE(in.good());
    return json::parse(in);
}

double dist(XY a, XY b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST_CASE("forward projection matches the PROJ fixtures to 1 cm") {
    const json o = oracle();
    REQUIRE(o["forward"].size() >= 5);
    for (const auto& p : o["forward"]) {
        const CrsCode crs = CrsCode::from_epsg(p["epsg"].get<int>());
        const XY got = forward_project(crs, p["lon"].get<double>(), p["lat"].get<double>());
        const XY want{p["x"].get<double>(), p["y"].get<double>()};
        INFO(crs.name(), " lon=", p["lon"].get<double>(), " lat=", p["lat"].get<double>());
        CHECK(dist(got, want) < 1e-2);
        const XY ll = inverse_project(crs, want.x, want.y);
        CHECK(std::abs(ll.x - p["lon"].get<double>()) < 1e-9);
        CHECK(std::abs(ll.y - p["lat"].get<double>()) < 1e-9);
    }
}

TEST_CASE("transform_point between UTM and World Mercator matches the fixture") {
    for (const auto& p : oracle()["transform_point"]) {
        const XY got = transform_point(CrsCode::from_epsg(p["src"].get<int>()),
                                       CrsCode::from_epsg(p["dst"].get<int>()), p["x"].get<double>(),
                                       p["y"].get<double>());
        CHECK(dist(got, {p["tx"].get<double>(), p["ty"].get<double>()}) < 1e-2);
    }
}

TEST_CASE("reproject_bbox is a tight conservative hull of the PROJ densified bounds") {
    for (const auto& b : oracle()["reproject_bbox"]) {
        const auto in = b["in"].get<std::vector<double>>();
        const auto out = b["out"].get<std::vector<double>>();
        const BoundingBox src{in[0], in[2], in[1], in[3], CrsCode::from_epsg(b["src"].get<int>())};
        const BoundingBox got = reproject_bbox(src, CrsCode::from_epsg(b["dst"].get<int>()), 21);
        CHECK(got.crs == CrsCode::from_epsg(b["dst"].get<int>()));
        CHECK(got.minx <= out[0] + 1e-2);
        CHECK(got.miny <= out[1] + 1e-2);
        CHECK(got.maxx >= out[2] - 1e-2);
        CHECK(got.maxy >= out[3] - 1e-2);
        CHECK(out[0] - got.minx < 1.0);
        CHECK(out[1] - got.miny < 1.0);
        CHECK(got.maxx - out[2] < 1.0);
        CHECK(got.maxy - out[3] < 1.0);
    }
}

TEST_CASE("forward then inverse round-trips within 1 mm") {
    Rng rng(11);
    const CrsCode crss[] = {CrsCode::world_mercator(), CrsCode::utm(23, true), CrsCode::utm(24, true),
                            CrsCode::utm(31, false), CrsCode::utm(1, false), CrsCode::utm(60, true)};
    for (const CrsCode crs : crss) {
        double worst = 0;
        for (int i = 0; i < 2000; ++i) {
            const double lat = rng.uniform(-84.0, 84.0);
            double lon = crs.kind() == CrsCode::Kind::Utm
                             ? crs.central_meridian() + rng.uniform(-30.0, 30.0)
                             : rng.uniform(-180.0, 180.0);
            if (lon > 180.0) lon -= 360.0;
            if (lon < -180.0) lon += 360.0;
            const XY p = forward_project(crs, lon, lat);
            const XY ll = inverse_project(crs, p.x, p.y);
            worst = std::max(worst, dist(forward_project(crs, ll.x, ll.y), p));
        }
        INFO(crs.name());
        CHECK(worst < 1e-3);
    }
}

TEST_CASE("UTM central meridian and equator hit the false origin") {
    const XY north = forward_project(CrsCode::utm(31, false), 3.0, 0.0);
    CHECK(north.x == doctest::Approx(500000.0).epsilon(1e-12));
    CHECK(std::abs(north.y) < 1e-6);
    const XY south = forward_project(CrsCode::utm(23, true), -45.0, 0.0);
    CHECK(std::abs(south.x - 500000.0) < 1e-6);
    CHECK(std::abs(south.y - 10000000.0) < 1e-6);
}

TEST_CASE("projection domain") {
    CHECK_THROWS_AS(forward_project(CrsCode::world_mercator(), 0.0, 85.0), Error);
    try {
        forward_project(CrsCode::utm(23, true), 0.0, -20.0);
        FAIL("expected OutOfDomain");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::OutOfDomain);
    }
    CHECK_NOTHROW(forward_project(CrsCode::world_mercator(), 179.0, 84.0));
}

TEST_CASE("supported CRS set") {
    CHECK(CrsCode::is_supported(4326));
    CHECK(CrsCode::is_supported(3395));
    CHECK(CrsCode::is_supported(32601));
    CHECK(CrsCode::is_supported(32760));
    CHECK_FALSE(CrsCode::is_supported(32661));
    CHECK_FALSE(CrsCode::is_supported(2154));
    try {
        CrsCode::from_epsg(3857);
        FAIL("expected UnsupportedCrs");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsupportedCrs);
    }
    CHECK(CrsCode::utm(23, true).epsg() == 32723);
    CHECK(CrsCode::utm(23, true).central_meridian() == -45.0);
    CHECK(CrsCode::world_mercator().name() == "EPSG:3395");
}

TEST_CASE("transform_point is the exact identity within one CRS") {
    const CrsCode utm = CrsCode::utm(23, true);
    const XY p = transform_point(utm, utm, 684623.123456789, 7466421.987654321);
    CHECK(p.x == 684623.123456789);
    CHECK(p.y == 7466421.987654321);
}

TEST_CASE("geotransform apply and invert") {
    const GeoTransform gt{680000.0, 7470000.0, 10.0, -10.0};
    const XY p = apply_geotransform(gt, 3.0, 4.0);
    CHECK(p.x == 680030.0);
    CHECK(p.y == 7469960.0);
    const XY q = invert_geotransform(gt, p.x, p.y);
    CHECK(q.x == 3.0);
    CHECK(q.y == 4.0);
    CHECK_THROWS_AS((GeoTransform{0, 0, -1, -1}.validate()), Error);
    CHECK_THROWS_AS((GeoTransform{0, 0, 1, 1}.validate()), Error);
}

TEST_CASE("bounding box algebra") {
    const CrsCode c = CrsCode::world_mercator();
    const BoundingBox a{0, 10, 0, 10, c};
    const BoundingBox b{5, 15, -5, 5, c};
    const BoundingBox i = intersection(a, b);
    CHECK(i == BoundingBox{5, 10, 0, 5, c});
    CHECK(hull(a, b) == BoundingBox{0, 15, -5, 10, c});
    CHECK(a.intersects(b));
    CHECK_FALSE(a.intersects(BoundingBox{10, 20, 0, 10, c}));  // touching edges share no area
    CHECK_FALSE(intersection(a, BoundingBox{20, 30, 0, 10, c}).valid());
}

TEST_CASE("reproject_bbox within one CRS returns the box unchanged") {
    const BoundingBox b{1, 2, 3, 4, CrsCode::utm(24, true)};
    CHECK(reproject_bbox(b, CrsCode::utm(24, true), 21) == b);
}
