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
// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "geochip/geodesy.hpp"
#include "geochip/inference.hpp"
#include "geochip/manifest.hpp"
#include "geochip/model.hpp"
#include "geochip/samplers.hpp"
#include "geochip/synth.hpp"
#include "geochip/transforms.hpp"
#include "gradcheck.hpp"
#include "mosaic_oracle.hpp"
#include "roundtrip.hpp"
#include "support.hpp"

using namespace geochip;
using testing::TempDir;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

// -- GeoTIFF round-trip -----------------------------------------------------------

Outcome geotiff_round_trip() {
    Outcome o;
    TempDir dir;
    Rng rng(20260415);
    for (int i = 0; i < 200; ++i) {
        const auto c = testing::random_case(rng);
        const std::string msg = testing::check_round_trip(c, dir / fmt::format("rt{}.tif", i));
        if (!msg.empty()) o.fail(fmt::format("case {}: {}", i, msg));
    }
    if (o.pass) o.detail = "200 cycles exact";
    return o;
}

// -- projection accuracy ----------------------------------------------------------

Outcome projection_accuracy() {
    Outcome o;
    std::vector<CrsCode> crss = {CrsCode::world_mercator()};
    for (int z = 1; z <= 60; ++z) {
        crss.push_back(CrsCode::utm(z, false));
        crss.push_back(CrsCode::utm(z, true));
    }
    Rng rng(99);
    double worst = 0;
    for (const CrsCode crs : crss) {
        for (int i = 0; i < 10000; ++i) {
            const double lat = rng.uniform(-84.0, 84.0);
            double lon = crs.kind() == CrsCode::Kind::Utm ? crs.central_meridian() + rng.uniform(-30.0, 30.0)
                                                          : rng.uniform(-180.0, 180.0);
            if (lon > 180.0) lon -= 360.0;
            if (lon < -180.0) lon += 360.0;
            const XY p = forward_project(crs, lon, lat);
            const XY ll = inverse_project(crs, p.x, p.y);
            const XY q = forward_project(crs, ll.x, ll.y);
            worst = std::max(worst, std::hypot(q.x - p.x, q.y - p.y));
        }
    }
    if (!(worst < 1e-3)) o.fail(fmt::format("round-trip error {:.3e} m", worst));

    std::ifstream in(testing::fixtures_dir() / "geodesy_oracle.json");
    const auto oracle = nlohmann::json::parse(in);
    double worst_fx = 0;
    std::size_t n_fx = 0;
    for (const auto& p : oracle["forward"]) {
        const XY got = forward_project(CrsCode::from_epsg(p["epsg"].get<int>()), p["lon"].get<double>(),
                                       p["lat"].get<double>());
        worst_fx = std::max(worst_fx, std::hypot(got.x - p["x"].get<double>(), got.y - p["y"].get<double>()));
        ++n_fx;
    }
    if (n_fx < 5) o.fail(fmt::format("only {} oracle points", n_fx));
    if (!(worst_fx < 1e-2)) o.fail(fmt::format("oracle deviation {:.3e} m", worst_fx));
    if (o.pass)
        o.detail = fmt::format("{} CRSs x 10000 points, worst round-trip {:.2e} m; {} oracle points, worst {:.2e} m",
                               crss.size(), worst, n_fx, worst_fx);
    return o;
}

// -- mosaic semantics ---------------------------------------------------------------

Outcome mosaic_semantics() {
    Outcome o;
    TempDir dir;
    Rng rng(2026);
    int built = 0;
    int unions = 0;
    for (int i = 0; built < 100; ++i) {
        const auto f = testing::random_mosaic(rng);
        const auto sub = dir.path() / fmt::format("m{}", i);
        std::filesystem::create_directories(sub);
        const auto e = testing::build_mosaic(f, sub);
        if (!e) continue;
        ++built;
        if (f.tree->op != testing::OracleNode::Op::Intersection) ++unions;
        for (int q = 0; q < 2; ++q) {
            const std::string msg = testing::check_against_oracle(f, e->materialize(testing::random_query(rng, *e)));
            if (!msg.empty()) o.fail(fmt::format("fixture {}: {}", i, msg));
        }
    }
    if (o.pass)
        o.detail = fmt::format("100 fixtures ({} union, {} intersection) exact", unions, 100 - unions);
    return o;
}

// -- sampler contracts --------------------------------------------------------------

DatasetExpr square_leaf(const TempDir& dir, const std::string& name, std::size_t px, double x0, double y0) {
    const CrsCode crs = CrsCode::utm(23, true);
    WriteOptions opt;
    opt.sample_type = SampleType::UInt8;
    opt.compression = Compression::Deflate;
    return DatasetExpr::leaf(
        testing::write_layer(dir / name, Image(1, px, px, 1.0), {x0, y0, 10, -10}, crs, LayerKind::Image, opt),
        crs, 10);
}

Outcome sampler_contracts() {
    Outcome o;
    TempDir dir;
    const auto big = square_leaf(dir, "big.tif", 1024, 600000, 7500000);
    const auto odd = square_leaf(dir, "odd.tif", 1000, 640000, 7500000);
    struct GridCase {
        const DatasetExpr* e;
        std::size_t stride;
        std::size_t expected;
    };
    for (const GridCase& g : {GridCase{&big, 256, 9}, GridCase{&odd, 512, 4}}) {
        const auto boxes = grid_sampler(*g.e, {512}, g.stride);
        if (boxes.size() != g.expected)
            o.fail(fmt::format("stride {}: {} chips, expected {}", g.stride, boxes.size(), g.expected));
        const GridWindow ext = grid_extent(*g.e);
        std::vector<int> hits(ext.width * ext.height, 0);
        for (const auto& b : boxes) {
            const GridWindow w = g.e->snap(b);
            if (w.width != 512 || w.height != 512 || w.col0 < 0 || w.row0 < 0 ||
                static_cast<std::size_t>(w.col0) + 512 > ext.width ||
                static_cast<std::size_t>(w.row0) + 512 > ext.height) {
                o.fail("grid chip leaves the extent");
                continue;
            }
            for (std::size_t r = 0; r < 512; ++r)
                for (std::size_t c = 0; c < 512; ++c)
                    ++hits[(static_cast<std::size_t>(w.row0) + r) * ext.width + static_cast<std::size_t>(w.col0) + c];
        }
        if (*std::min_element(hits.begin(), hits.end()) < 1) o.fail("grid sampler leaves pixels uncovered");
    }

    const auto e = big | odd;
    const auto regions = e.sampling_regions();
    const double res = e.target_res();
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto boxes = random_sampler(e, {256}, 300, seed);
        if (boxes.size() != 300) o.fail(fmt::format("{} boxes for length 300", boxes.size()));
        if (random_sampler(e, {256}, 300, seed) != boxes) o.fail("random sampler not deterministic");
        for (const auto& b : boxes) {
            const double kx = (b.minx - e.bounds().minx) / res;
            const double ky = (e.bounds().maxy - b.maxy) / res;
            if (kx != std::round(kx) || ky != std::round(ky)) o.fail("random box off the grid");
            if (std::abs(b.width() - 256 * res) > 1e-6 || std::abs(b.height() - 256 * res) > 1e-6)
                o.fail("random box has the wrong size");
            const bool inside = std::any_of(regions.begin(), regions.end(),
                                            [&](const BoundingBox& r) { return r.contains(b); });
            if (!inside) o.fail("random box outside every sampling region");
        }
    }
    if (o.pass) o.detail = "counts 9 and 4, full coverage; 3 seeds x 300 boxes in-bounds, snapped, deterministic";
    return o;
}

// -- transform identities -----------------------------------------------------------

Outcome transform_identities() {
    Outcome o;
    const BandSchema schema;
    Rng rng(5);
    std::size_t nd_values = 0;
    for (int draw = 0; draw < 50; ++draw) {
        Image img(6, 32, 32);
        for (double& v : img.data) v = static_cast<double>(rng.below(10001));
        const ValidityPlane valid(32, 32, 1);
        scale_reflectance(img, valid);
        for (const auto& idx : default_indices()) {
            for (double v : normalized_difference(img, schema, idx.band_a, idx.band_b).data) {
                if (!(v >= -1.0 && v <= 1.0)) o.fail(fmt::format("normalized difference {} out of range", v));
                ++nd_values;
            }
        }
        Image sym = img;
        for (std::size_t t = 0; t < sym.pixels(); ++t) sym(3, t / 32, t % 32) = sym(1, t / 32, t % 32);
        for (double v : normalized_difference(sym, schema, "green", "nir").data)
            if (v != 0.0) o.fail("normalized difference non-zero on symmetric input");

        StatsAccumulator acc(6);
        acc.add(img, valid);
        const BandStats base = acc.finish(schema.names());
        Image full = append_indices(img, schema);
        const Image before = full;
        normalize(full, valid, pad_stats(base, 3, {"ndwi_nir", "ndwi_swir2", "ndvi"}));
        const auto off = static_cast<std::ptrdiff_t>(6 * full.pixels());
        if (!std::equal(before.data.begin() + off, before.data.end(), full.data.begin() + off))
            o.fail("padded normalization changed an index channel");
    }

    TempDir dir;
    Image img(6, 96, 96);
    for (double& v : img.data) v = static_cast<double>(1 + rng.below(10000));
    for (std::size_t i = 0; i < img.pixels(); i += 11) img.data[i] = 0;
    WriteOptions opt;
    opt.sample_type = SampleType::UInt16;
    opt.nodata = 0;
    const auto e = DatasetExpr::leaf(testing::write_layer(dir / "s.tif", img, {680000, 7470000, 10, -10},
                                                          CrsCode::utm(23, true), LayerKind::Image, opt),
                                     CrsCode::world_mercator(), 10);
    const auto boxes = random_sampler(e, {32}, 40, 3);
    StatsOptions so;
    so.with_indices = true;
    const BandStats s = compute_band_stats(e, boxes, so);
    std::vector<std::vector<double>> px;
    for (const auto& q : boxes) {
        Sample sm = e.materialize(q);
        scale_reflectance(sm.image, sm.validity);
        const Image f = append_indices(sm.image, so.schema);
        for (std::size_t t = 0; t < f.pixels(); ++t) {
            if (!sm.validity.data[t]) continue;
            std::vector<double> p(f.channels);
            for (std::size_t c = 0; c < f.channels; ++c) p[c] = f.data[c * f.pixels() + t];
            px.push_back(std::move(p));
        }
    }
    double worst = 0;
    for (std::size_t c = 0; c < s.channels(); ++c) {
        double mean = 0;
        for (const auto& p : px) mean += p[c];
        mean /= static_cast<double>(px.size());
        double var = 0;
        for (const auto& p : px) var += (p[c] - mean) * (p[c] - mean);
        const double sd = std::max(std::sqrt(var / static_cast<double>(px.size())), kStdFloor);
        worst = std::max({worst, std::abs(s.means[c] - mean) / std::abs(mean), std::abs(s.stds[c] - sd) / sd});
    }
    if (s.n_pixels != px.size()) o.fail("streaming stats pixel count differs");
    if (!(worst < 1e-10)) o.fail(fmt::format("streaming vs two-pass relative error {:.3e}", worst));
    if (o.pass)
        o.detail = fmt::format("{} index values in [-1, 1]; index channels bit-identical; stats rel. error {:.2e}",
                               nd_values, worst);
    return o;
}

// -- gradient check -----------------------------------------------------------------

Outcome gradient_check() {
    Outcome o;
    Rng rng(77);
    double worst = 0;
    for (int i = 0; i < 200; ++i) worst = std::max(worst, testing::gradcheck_draw(rng));
    if (!(worst < 1e-4)) o.fail(fmt::format("worst relative error {:.3e}", worst));
    if (o.pass) o.detail = fmt::format("200 draws, worst relative error {:.2e}", worst);
    return o;
}

// -- end-to-end learning ------------------------------------------------------------

Outcome end_to_end() {
    Outcome o;
    TempDir dir;
    constexpr std::uint64_t kSeed = 7;
    const Manifest m = synthesize_corpus(dir / "corpus", SynthOptions{8, 768, 10.0, kSeed});
    const auto ids = m.tile_ids();
    const std::vector<std::string> train_ids(ids.begin(), ids.begin() + 6);
    const std::vector<std::string> val_ids(ids.begin() + 6, ids.end());
    const CrsCode target = CrsCode::world_mercator();
    std::set<int> zones;
    for (const auto& l : m.layers) zones.insert(l.epsg);

    const auto e_train = corpus_expr(m, train_ids, target, 10.0);
    const auto e_val = corpus_expr(m, val_ids, target, 10.0);
    const BandSchema schema;
    StatsOptions so;
    const auto stat_boxes = random_sampler(e_train, {512}, 64, derive_seed(kSeed, "stats"));
    const BandStats base = compute_band_stats(e_train, stat_boxes, so);
    Preprocess prep{schema, kDefaultReflectanceFactor, pad_stats(base, 3, {"ndwi_nir", "ndwi_swir2", "ndvi"})};

    TrainConfig cfg;
    cfg.seed = kSeed;
    const TrainResult r = train(e_train, cfg, prep);
    const MetricsReport model = evaluate(logistic_predictor(r.weights, prep), e_val);
    const MetricsReport ndwi = evaluate(ndwi_threshold_model(), e_val);

    if (zones.size() != 2) o.fail(fmt::format("corpus spans {} CRSs", zones.size()));
    if (!(model.overall_accuracy() >= 0.95)) o.fail(fmt::format("accuracy {:.4f}", model.overall_accuracy()));
    if (!(model.iou_water() >= 0.90)) o.fail(fmt::format("water IoU {:.4f}", model.iou_water()));
    if (!(ndwi.iou_water() >= 0.85)) o.fail(fmt::format("NDWI IoU {:.4f}", ndwi.iou_water()));
    o.detail = fmt::format("{}; accuracy {:.4f}, IoU {:.4f}, NDWI IoU {:.4f}, loss {:.3f} -> {:.3f}",
                           o.pass ? "ok" : o.detail, model.overall_accuracy(), model.iou_water(), ndwi.iou_water(),
                           r.epoch_loss.front(), r.epoch_loss.back());
    return o;
}

// -- inference stitching ------------------------------------------------------------

Outcome inference_stitching() {
    Outcome o;
    TempDir dir;
    Rng rng(12);
    Image img(1, 300, 260);
    for (double& v : img.data) v = static_cast<double>(rng.below(1025)) / 1024.0;
    for (std::size_t y = 40; y < 60; ++y)
        for (std::size_t x = 100; x < 180; ++x) img(0, y, x) = -1.0;
    WriteOptions opt;
    opt.nodata = -1.0;
    const CrsCode crs = CrsCode::utm(23, true);
    const GeoTransform gt{681230, 7465470, 10, -10};
    const auto e = DatasetExpr::leaf(testing::write_layer(dir / "scene.tif", img, gt, crs, LayerKind::Image, opt),
                                     crs, 10);
    const GridWindow ext = grid_extent(e);
    const Sample full = e.materialize(GridWindow{0, 0, ext.width, ext.height});
    const auto ref = identity_predictor()(full);

    const ScenePrediction id = predict_scene(e, identity_predictor(), 64, 64);
    for (std::size_t t = 0; t < ref.size(); ++t) {
        if (id.validity.data[t] != full.validity.data[t]) {
            o.fail("identity stitching validity differs");
            break;
        }
        if (full.validity.data[t] && id.probability.data[t] != ref[t]) {
            o.fail("identity stitching value differs");
            break;
        }
    }
    const ScenePrediction k = predict_scene(e, constant_predictor(0.7), 64, 32);
    for (std::size_t t = 0; t < k.probability.size(); ++t)
        if (k.validity.data[t] && k.probability.data[t] != 0.7) {
            o.fail("constant blending is not exact");
            break;
        }

    const ScenePrediction p = predict_scene(e, identity_predictor(), 64, 32);
    export_prediction(p, dir / "a.tif");
    export_prediction(predict_scene(e, identity_predictor(), 64, 32), dir / "b.tif");
    if (slurp(dir / "a.tif") != slurp(dir / "b.tif")) o.fail("repeated runs differ");
    const RasterHeader h = open_raster(dir / "a.tif");
    const double kx = (h.geotransform.origin_x - gt.origin_x) / gt.pixel_w + 0.0;
    const double ky = (h.geotransform.origin_y - gt.origin_y) / gt.pixel_h + 0.0;
    if (kx != std::round(kx) || ky != std::round(ky) || h.geotransform.pixel_w != gt.pixel_w ||
        h.geotransform.pixel_h != gt.pixel_h || !(h.crs == crs))
        o.fail("export is not grid-aligned with the scene");
    if (o.pass) o.detail = fmt::format("exact stitching and blending; export offset ({}, {}) px; byte-identical", kx, ky);
    return o;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"geotiff_round_trip", 30, geotiff_round_trip},
        {"projection_accuracy", 10, projection_accuracy},
        {"mosaic_semantics", 30, mosaic_semantics},
        {"sampler_contracts", 0, sampler_contracts},
        {"transform_identities", 0, transform_identities},
        {"gradient_check", 10, gradient_check},
        {"end_to_end_learning", 600, end_to_end},
        {"inference_stitching", 0, inference_stitching},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(fmt::format("exception: {}", e.what()));
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs >= c.budget_s) o.fail(fmt::format("took {:.1f} s, budget {:.0f} s", secs, c.budget_s));
        fmt::print("{} {}: {} ({:.1f} s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail, secs);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
