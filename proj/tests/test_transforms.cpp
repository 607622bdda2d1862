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
#include <algorithm>
#include <cmath>
#include <functional>

#include <doctest.h>

#include "geochip/error.hpp"
#include "geochip/samplers.hpp"
#include "geochip/transforms.hpp"
#include "support.hpp"

using namespace geochip;
using testing::TempDir;

namespace {

ErrorCode error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

ValidityPlane all_valid(const Image& img) { return ValidityPlane(img.height, img.width, 1); }

Image six_band(Rng& rng, std::size_t h, std::size_t w) {
    Image img(6, h, w);
    for (double& v : img.data) v = static_cast<double>(rng.below(10001));
    return img;
}

struct TwoPass {
    std::vector<double> mean;
    std::vector<double> std;
};

TwoPass two_pass(const std::vector<std::vector<double>>& pixels, std::size_t channels) {
    TwoPass r{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
    const auto n = static_cast<double>(pixels.size());
    for (const auto& p : pixels)
        for (std::size_t c = 0; c < channels; ++c) r.mean[c] += p[c];
    for (double& m : r.mean) m /= n;
    for (const auto& p : pixels)
        for (std::size_t c = 0; c < channels; ++c) r.std[c] += (p[c] - r.mean[c]) * (p[c] - r.mean[c]);
    for (double& s : r.std) s = std::max(std::sqrt(s / n), kStdFloor);
    return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("band schema") {
    const BandSchema s;
    CHECK(s.names() == std::vector<std::string>{"blue", "green", "red", "nir", "swir1", "swir2"});
    CHECK(s.index("nir") == 3);
    CHECK(s.channel_names().size() == 9);
    CHECK(s.channel_names()[6] == "ndwi_nir");
    CHECK(error_of([&] { s.index("pan"); }) == ErrorCode::UnknownBand);
    const BandSchema r({"swir2", "swir1", "nir", "red", "green", "blue"});
    CHECK(r.index("blue") == 5);
    CHECK(error_of([] { BandSchema({"blue", "green"}); }) == ErrorCode::InvalidArgument);
    CHECK(error_of([] { BandSchema({"blue", "green", "red", "nir", "swir1", "swir1"}); }) ==
          ErrorCode::InvalidArgument);
    CHECK(error_of([] { BandSchema({"blue", "green", "red", "nir", "swir1", "pan"}); }) ==
          ErrorCode::UnknownBand);
}

TEST_CASE("reflectance scaling") {
    Image img(1, 1, 3);
    img.data = {10000, 0, 5000};
    ValidityPlane v(1, 3, 1);
    v.data[2] = 0;
    scale_reflectance(img, v);
    CHECK(img.data == std::vector<double>{1.0, 0.0, 5000});
    Image same = img;
    scale_reflectance(same, v, 1.0);
    CHECK(same.data == img.data);
    CHECK(error_of([&] { scale_reflectance(img, v, 0.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("normalized difference") {
    const BandSchema s;
    Image img(6, 1, 4, 0.0);
    // green, nir pairs: symmetric, 0.3/0.1, zero/zero, water-like
    const double green[] = {0.2, 0.3, 0.0, 0.08};
    const double nir[] = {0.2, 0.1, 0.0, 0.02};
    for (std::size_t i = 0; i < 4; ++i) {
        img(1, 0, i) = green[i];
        img(3, 0, i) = nir[i];
    }
    const auto nd = normalized_difference(img, s, "green", "nir");
    CHECK(nd.data[0] == 0.0);
    CHECK(nd.data[1] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(nd.data[2] == 0.0);
    CHECK(nd.data[3] > 0.0);
    CHECK(error_of([&] { normalized_difference(img, s, "green", "pan"); }) == ErrorCode::UnknownBand);

    Rng rng(2);
    Image r = six_band(rng, 40, 40);
    for (const auto& idx : default_indices()) {
        const auto p = normalized_difference(r, s, idx.band_a, idx.band_b);
        for (double v : p.data) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("append_indices") {
    const BandSchema s;
    Rng rng(3);
    const Image img = six_band(rng, 9, 7);
    const Image out = append_indices(img, s);
    CHECK(out.channels == 9);
    CHECK(std::equal(img.data.begin(), img.data.end(), out.data.begin()));
    const auto ndvi = normalized_difference(img, s, "nir", "red");
    CHECK(std::equal(ndvi.data.begin(), ndvi.data.end(), out.data.begin() + 8 * 63));

    Image flat(6, 2, 2, 0.25);
    const Image f = append_indices(flat, s);
    CHECK(std::all_of(f.data.begin() + 24, f.data.end(), [](double v) { return v == 0.0; }));
    CHECK(error_of([&] { append_indices(Image(3, 2, 2), s); }) == ErrorCode::UnknownBand);
}

TEST_CASE("stats accumulator conventions") {
    StatsAccumulator a(1);
    a.add_pixel(std::vector<double>{0.0});
    a.add_pixel(std::vector<double>{2.0});
    const BandStats s = a.finish({"x"});
    CHECK(s.means[0] == 1.0);
    CHECK(s.stds[0] == 1.0);
    CHECK(s.n_pixels == 2);

    StatsAccumulator c(2);
    Image img(2, 5, 5, 3.5);
    c.add(img, all_valid(img));
    const BandStats cs = c.finish({"a", "b"});
    CHECK(cs.means == std::vector<double>{3.5, 3.5});
    CHECK(cs.stds == std::vector<double>{kStdFloor, kStdFloor});

    CHECK(error_of([] { StatsAccumulator(1).finish({"x"}); }) == ErrorCode::NoValidPixels);
}

TEST_CASE("merged accumulators match one pass and two-pass reference") {
    Rng rng(5);
    std::vector<std::vector<double>> pixels;
    StatsAccumulator whole(3);
    StatsAccumulator left(3);
    StatsAccumulator right(3);
    for (int i = 0; i < 5000; ++i) {
        std::vector<double> p = {rng.uniform(0, 1), 1e4 + rng.normal(), rng.uniform(-3, 3)};
        pixels.push_back(p);
        whole.add_pixel(p);
        (i < 1234 ? left : right).add_pixel(p);
    }
    left.merge(right);
    const BandStats a = whole.finish({"a", "b", "c"});
    const BandStats b = left.finish({"a", "b", "c"});
    const TwoPass ref = two_pass(pixels, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(rel(a.means[c], ref.mean[c]) < 1e-10);
        CHECK(rel(a.stds[c], ref.std[c]) < 1e-10);
        CHECK(rel(b.means[c], ref.mean[c]) < 1e-10);
        CHECK(rel(b.stds[c], ref.std[c]) < 1e-10);
    }
}

TEST_CASE("compute_band_stats over chips") {
    TempDir dir;
    Rng rng(6);
    Image img = six_band(rng, 80, 80);
    for (std::size_t i = 0; i < 80 * 80; i += 13) img.data[i] = 0;  // nodata holes in band 0
    WriteOptions opt;
    opt.sample_type = SampleType::UInt16;
    opt.nodata = 0;
    const CrsCode crs = CrsCode::utm(23, true);
    const auto e = DatasetExpr::leaf(
        testing::write_layer(dir / "i.tif", img, {680000, 7470000, 10, -10}, crs, LayerKind::Image, opt),
        CrsCode::world_mercator(), 10);
    const auto boxes = random_sampler(e, {24}, 30, 9);

    for (bool idx : {false, true}) {
        StatsOptions so;
        so.with_indices = idx;
        so.group = 4;
        const BandStats s = compute_band_stats(e, boxes, so);
        CHECK(s.channels() == (idx ? 9 : 6));
        CHECK(s.names.size() == s.channels());

        std::vector<std::vector<double>> pixels;
        for (const auto& q : boxes) {
            Sample sm = e.materialize(q);
            scale_reflectance(sm.image, sm.validity);
            const Image full = idx ? append_indices(sm.image, so.schema) : sm.image;
            for (std::size_t t = 0; t < full.pixels(); ++t) {
                if (!sm.validity.data[t]) continue;
                std::vector<double> p(full.channels);
                for (std::size_t c = 0; c < full.channels; ++c) p[c] = full.data[c * full.pixels() + t];
                pixels.push_back(p);
            }
        }
        CHECK(s.n_pixels == pixels.size());
        const TwoPass ref = two_pass(pixels, s.channels());
        for (std::size_t c = 0; c < s.channels(); ++c) {
            CHECK(rel(s.means[c], ref.mean[c]) < 1e-10);
            CHECK(rel(s.stds[c], ref.std[c]) < 1e-10);
        }

        // Same chips in another order: equal to rounding.
        std::vector<BoundingBox> rev(boxes.rbegin(), boxes.rend());
        const BandStats r = compute_band_stats(e, rev, so);
        for (std::size_t c = 0; c < s.channels(); ++c) {
            CHECK(rel(r.means[c], s.means[c]) < 1e-12);
            CHECK(rel(r.stds[c], s.stds[c]) < 1e-12);
        }
        so.group = 1;
        CHECK(compute_band_stats(e, boxes, so) == s);
    }
}

TEST_CASE("pad_stats and normalize") {
    BandStats s{{"a", "b"}, {1.0, 2.0}, {0.5, 4.0}, 10};
    const BandStats same = pad_stats(s, 0);
    CHECK(same == s);
    const BandStats p = pad_stats(s, 3, {"x", "y", "z"});
    CHECK(p.means == std::vector<double>{1.0, 2.0, 0.0, 0.0, 0.0});
    CHECK(p.stds == std::vector<double>{0.5, 4.0, 1.0, 1.0, 1.0});
    CHECK(p.names.back() == "z");

    const BandSchema schema;
    Rng rng(7);
    Image img = six_band(rng, 16, 16);
    const ValidityPlane v = all_valid(img);
    scale_reflectance(img, v);
    StatsAccumulator acc(6);
    acc.add(img, v);
    const BandStats base = acc.finish(schema.names());
    Image full = append_indices(img, schema);
    const Image before = full;
    normalize(full, v, pad_stats(base, 3, {"ndwi_nir", "ndwi_swir2", "ndvi"}));
    const std::size_t plane = full.pixels();
    CHECK(std::equal(before.data.begin() + 6 * static_cast<std::ptrdiff_t>(plane), before.data.end(),
                     full.data.begin() + 6 * static_cast<std::ptrdiff_t>(plane)));
    for (std::size_t c = 0; c < 6; ++c) {
        double m = 0;
        double ss = 0;
        for (std::size_t t = 0; t < plane; ++t) m += full(c, t / 16, t % 16);
        m /= static_cast<double>(plane);
        for (std::size_t t = 0; t < plane; ++t) ss += std::pow(full(c, t / 16, t % 16) - m, 2);
        CHECK(std::abs(m) < 1e-9);
        CHECK(std::abs(std::sqrt(ss / static_cast<double>(plane)) - 1.0) < 1e-6);
    }

    Image at_mean(2, 2, 2);
    for (std::size_t t = 0; t < 4; ++t) {
        at_mean.data[t] = 1.0;
        at_mean.data[4 + t] = 2.0;
    }
    normalize(at_mean, all_valid(at_mean), s);
    CHECK(std::all_of(at_mean.data.begin(), at_mean.data.end(), [](double x) { return x == 0.0; }));
    Image id = testing::random_image(rng, 2, 3, 3);
    const Image id0 = id;
    normalize(id, all_valid(id), BandStats{{"a", "b"}, {0, 0}, {1, 1}, 1});
    CHECK(id.data == id0.data);
    CHECK(error_of([&] { normalize(id, all_valid(id), p); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("stats JSON round-trip") {
    const BandStats s{{"a", "b"}, {0.1, 1.0 / 3.0}, {0.2, 1e-6}, 42};
    const auto j = s.to_json();
    CHECK(j["version"] == kStatsVersion);
    CHECK(BandStats::from_json(nlohmann::json::parse(j.dump())) == s);
    CHECK(stats_checksum(s) == stats_checksum(BandStats::from_json(j)));
    CHECK(stats_checksum(s).rfind("fnv1a64:", 0) == 0);
    auto bad = j;
    bad["version"] = 9;
    CHECK(error_of([&] { BandStats::from_json(bad); }) == ErrorCode::InvalidArgument);
    bad = j;
    bad["channels"][0]["std"] = -1.0;
    CHECK(error_of([&] { BandStats::from_json(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("preprocess chains scale, indices and normalize") {
    const BandSchema schema;
    Rng rng(8);
    Sample s;
    s.image = six_band(rng, 8, 8);
    s.validity = all_valid(s.image);
    s.validity.data[5] = 0;
    BandStats stats{schema.channel_names(), std::vector<double>(9, 0.1), std::vector<double>(9, 2.0), 1};
    const Image out = preprocess(s, {schema, kDefaultReflectanceFactor, stats});
    CHECK(out.channels == 9);
    Image ref = s.image;
    scale_reflectance(ref, s.validity);
    ref = append_indices(ref, schema);
    normalize(ref, s.validity, stats);
    CHECK(out.data == ref.data);
}
