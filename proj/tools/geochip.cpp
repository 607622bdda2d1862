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

// geochip synth|index|stats|train|eval|predict
//
// Module errors exit 1 with one JSON line on stderr:
//   {"error":"NoOverlap","message":"..."}
// Argument errors exit 2.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "geochip/datasets.hpp"
#include "geochip/error.hpp"
#include "geochip/inference.hpp"
#include "geochip/manifest.hpp"
#include "geochip/model.hpp"
#include "geochip/random.hpp"
#include "geochip/samplers.hpp"
#include "geochip/synth.hpp"
#include "geochip/transforms.hpp"

namespace {

using namespace geochip;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

struct GridArgs {
    int crs = 3395;
    double res = 10.0;
};

struct SplitTiles {
    std::vector<std::string> train;
    std::vector<std::string> val;
};

// --split is either a count of leading tiles or a comma list of tile ids.
SplitTiles split_tiles(const Manifest& m, const std::string& arg) {
    const auto ids = m.tile_ids();
    SplitTiles s;
    if (arg.empty() || arg.find_first_not_of("0123456789") == std::string::npos) {
        std::size_t n_train = arg.empty() ? ids.size() * 3 / 4 : std::stoul(arg);
        if (arg.empty()) n_train = std::max<std::size_t>(n_train, 1);
        if (n_train > ids.size())
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("split {} exceeds the {} tiles in the manifest", n_train, ids.size()));
        s.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
        s.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
        return s;
    }
    std::vector<std::string> wanted;
    std::stringstream ss(arg);
    for (std::string id; std::getline(ss, id, ',');)
        if (!id.empty()) wanted.push_back(id);
    for (const auto& w : wanted)
        if (std::find(ids.begin(), ids.end(), w) == ids.end())
            throw Error(ErrorCode::InvalidArgument, fmt::format("unknown tile id '{}'", w));
    for (const auto& id : ids)
        (std::find(wanted.begin(), wanted.end(), id) != wanted.end() ? s.train : s.val).push_back(id);
    return s;
}

void emit(const json& doc, const std::string& out) {
    const std::string text = doc.dump(2) + "\n";
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw Error(ErrorCode::IoError, fmt::format("{}: cannot write", out));
    f << text;
    if (!f) throw Error(ErrorCode::IoError, fmt::format("{}: write failed", out));
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("{}: cannot open", path));
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, fmt::format("{}: {}", path, e.what()));
    }
}

BandSchema schema_of(const Manifest& m) {
    return m.band_names.empty() ? BandSchema() : BandSchema(m.band_names);
}

json grid_json(const GridArgs& g) { return {{"crs", fmt::format("EPSG:{}", g.crs)}, {"res", g.res}}; }

json bbox_json(const BoundingBox& b) {
    return {{"crs", b.crs.name()}, {"bounds", {b.minx, b.miny, b.maxx, b.maxy}}};
}

void validate_grid(const GridArgs& g) {
    CrsCode::from_epsg(g.crs);
    if (!(g.res > 0)) throw Error(ErrorCode::InvalidArgument, "--res must be > 0");
}

// -- synth ------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    SynthOptions opt;
};

void cmd_synth(const SynthArgs& a) {
    const Manifest m = synthesize_corpus(a.out, a.opt);
    spdlog::info("wrote {} layers and manifest.json to {}", m.layers.size(), a.out);
}

// -- index ------------------------------------------------------------------------

struct IndexArgs {
    std::string manifest;
    std::string out;
    GridArgs grid;
};

void cmd_index(const IndexArgs& a) {
    validate_grid(a.grid);
    const Manifest m = load_manifest(a.manifest);
    const CrsCode crs = CrsCode::from_epsg(a.grid.crs);
    json layers = json::array();
    std::optional<BoundingBox> all;
    for (const auto& l : m.layers) {
        const RasterLayer layer = build_layer(m.resolve(l), l.kind);
        const RasterHeader& h = layer.header();
        if (h.crs.epsg() != l.epsg || h.band_count != l.bands || !(layer.bounds_native == l.bounds))
            throw Error(ErrorCode::InvalidManifest,
                        fmt::format("{}: header disagrees with manifest entry", l.path.string()));
        const BoundingBox target = reproject_bbox(layer.bounds_native, crs, kBoundsDensify);
        all = all ? hull(*all, target) : target;
        layers.push_back({{"path", l.path.generic_string()},
                          {"tile", l.tile},
                          {"kind", std::string(to_string(l.kind))},
                          {"width", h.width},
                          {"height", h.height},
                          {"bands", h.band_count},
                          {"dtype", std::string(to_string(h.sample_type))},
                          {"tiled", h.layout.tiled},
                          {"compression", h.compression == Compression::Deflate ? "deflate" : "none"},
                          {"nodata", h.nodata ? json(*h.nodata) : json(nullptr)},
                          {"native", bbox_json(layer.bounds_native)},
                          {"target", bbox_json(target)}});
    }
    json report = {{"version", 1},
                   {"config", {{"manifest", a.manifest}, {"grid", grid_json(a.grid)}}},
                   {"tiles", m.tile_ids()},
                   {"layers", layers}};
    if (all) report["bounds"] = bbox_json(*all);
    emit(report, a.out);
}

// -- stats ------------------------------------------------------------------------

struct StatsArgs {
    std::string manifest;
    std::string out;
    GridArgs grid;
    std::string split;
    std::size_t chip = 512;
    std::size_t length = 64;
    std::uint64_t seed = 0;
    double factor = kDefaultReflectanceFactor;
};

void cmd_stats(const StatsArgs& a) {
    validate_grid(a.grid);
    const Manifest m = load_manifest(a.manifest);
    const auto split = split_tiles(m, a.split);
    const auto e = corpus_expr(m, split.train, CrsCode::from_epsg(a.grid.crs), a.grid.res);
    const auto boxes = random_sampler(e, ChipSpec{a.chip}, a.length, derive_seed(a.seed, "stats"));
    StatsOptions opt;
    opt.schema = schema_of(m);
    opt.reflectance_factor = a.factor;
    const BandStats stats = compute_band_stats(e, boxes, opt);
    json doc = stats.to_json();
    doc["config"] = {{"manifest", a.manifest}, {"grid", grid_json(a.grid)}, {"tiles", split.train},
                     {"chip", a.chip},         {"length", a.length},        {"seed", a.seed},
                     {"rng", std::string(kRngName)}, {"reflectance_factor", a.factor}};
    emit(doc, a.out);
}

// -- train ------------------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string stats;
    std::string out;
    GridArgs grid;
    std::string split;
    TrainConfig cfg;
    double factor = kDefaultReflectanceFactor;
};

void cmd_train(const TrainArgs& a) {
    validate_grid(a.grid);
    a.cfg.validate();
    const Manifest m = load_manifest(a.manifest);
    const auto split = split_tiles(m, a.split);
    const auto e = corpus_expr(m, split.train, CrsCode::from_epsg(a.grid.crs), a.grid.res);
    const BandSchema schema = schema_of(m);
    const BandStats base = BandStats::from_json(read_json(a.stats));
    if (base.channels() != schema.size())
        throw Error(ErrorCode::ShapeMismatch,
                    fmt::format("stats have {} channels, expected {} base bands", base.channels(),
                                schema.size()));
    std::vector<std::string> index_names;
    for (const auto& idx : default_indices()) index_names.push_back(idx.name);
    ModelFile mf;
    mf.prep = Preprocess{schema, a.factor, pad_stats(base, index_names.size(), index_names)};
    mf.config = a.cfg;
    auto result = train(e, a.cfg, mf.prep);
    mf.weights = std::move(result.weights);
    mf.epoch_loss = std::move(result.epoch_loss);
    json doc = mf.to_json();
    doc["config"] = {{"manifest", a.manifest}, {"stats", a.stats}, {"grid", grid_json(a.grid)},
                     {"tiles", split.train}};
    emit(doc, a.out);
}

// -- eval -------------------------------------------------------------------------

struct EvalArgs {
    std::string manifest;
    std::string model;
    std::string out;
    std::string predictor = "model";
    GridArgs grid;
    std::string split;
    std::size_t chip = 512;
    std::optional<std::size_t> stride;  // defaults to chip
    double tau = 0.0;
};

void cmd_eval(const EvalArgs& a) {
    validate_grid(a.grid);
    const Manifest m = load_manifest(a.manifest);
    const auto split = split_tiles(m, a.split);
    if (split.val.empty()) throw Error(ErrorCode::InvalidArgument, "split leaves no validation tiles");
    const auto e = corpus_expr(m, split.val, CrsCode::from_epsg(a.grid.crs), a.grid.res);
    Predictor p;
    if (a.predictor == "model") {
        if (a.model.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required for --predictor model");
        ModelFile mf = load_model(a.model);
        p = logistic_predictor(std::move(mf.weights), std::move(mf.prep));
    } else if (a.predictor == "ndwi") {
        p = ndwi_threshold_model(a.tau, schema_of(m));
    } else {
        p = truth_predictor();
    }
    const std::size_t stride = a.stride.value_or(a.chip);
    const MetricsReport r = evaluate(p, e, a.chip, stride);
    json doc = r.to_json();
    doc["config"] = {{"manifest", a.manifest}, {"model", a.model},  {"predictor", a.predictor},
                     {"grid", grid_json(a.grid)}, {"tiles", split.val}, {"chip", a.chip},
                     {"stride", stride},        {"tau", a.tau}};
    emit(doc, a.out);
}

// -- predict ----------------------------------------------------------------------

struct PredictArgs {
    std::string scene;
    std::string manifest;
    std::string tiles;
    std::string model;
    std::string out;
    std::string quicklook;
    std::string predictor = "model";
    std::optional<int> crs;
    std::optional<double> res;
    std::size_t patch = 512;
    std::size_t stride = 256;
    double tau = 0.0;
};

void cmd_predict(const PredictArgs& a) {
    if (a.scene.empty() == a.manifest.empty())
        throw Error(ErrorCode::InvalidArgument, "give exactly one of --scene or --manifest");
    std::optional<DatasetExpr> scene;
    BandSchema schema;
    if (!a.scene.empty()) {
        RasterLayer layer = build_layer(a.scene, LayerKind::Image);
        const CrsCode crs = a.crs ? CrsCode::from_epsg(*a.crs) : layer.header().crs;
        const double res = a.res ? *a.res : layer.header().geotransform.pixel_w;
        scene = DatasetExpr::leaf(std::move(layer), crs, res);
    } else {
        const Manifest m = load_manifest(a.manifest);
        schema = schema_of(m);
        const auto tiles = split_tiles(m, a.tiles.empty() ? std::to_string(m.tile_ids().size()) : a.tiles).train;
        const CrsCode crs = CrsCode::from_epsg(a.crs.value_or(3395));
        const double res = a.res.value_or(10.0);
        for (const auto& l : m.layers) {
            if (l.kind != LayerKind::Image || std::find(tiles.begin(), tiles.end(), l.tile) == tiles.end())
                continue;
            auto leaf = DatasetExpr::leaf(build_layer(m.resolve(l), l.kind), crs, res);
            scene = scene ? (*scene | leaf) : leaf;
        }
        if (!scene) throw Error(ErrorCode::InvalidArgument, "no image layers selected");
    }
    if (!(scene->target_res() > 0)) throw Error(ErrorCode::InvalidArgument, "--res must be > 0");

    Predictor p;
    if (a.predictor == "model") {
        if (a.model.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required for --predictor model");
        ModelFile mf = load_model(a.model);
        p = logistic_predictor(std::move(mf.weights), std::move(mf.prep));
    } else if (a.predictor == "ndwi") {
        p = ndwi_threshold_model(a.tau, schema);
    } else {
        p = identity_predictor();
    }
    const ScenePrediction pred = predict_scene(*scene, p, a.patch, a.stride);
    export_prediction(pred, a.out);
    if (!a.quicklook.empty()) quicklook(pred.classes(), a.quicklook);
    spdlog::info("wrote {}x{} prediction to {}", pred.grid.width, pred.grid.height, a.out);
}

void add_grid(CLI::App* cmd, GridArgs& g) {
    cmd->add_option("--crs", g.crs, "Target CRS as an EPSG code")->capture_default_str();
    cmd->add_option("--res", g.res, "Target resolution in CRS units")->capture_default_str();
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("geochip");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* lvl = std::getenv("GEOCHIP_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"geochip: geospatial chips, water segmentation and scene prediction"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Generate the seeded synthetic corpus");
    c_synth->add_option("--out", synth.out, "Output directory")->required();
    c_synth->add_option("--tiles", synth.opt.n_tiles, "Number of tiles")->capture_default_str()->check(CLI::PositiveNumber);
    c_synth->add_option("--tile-px", synth.opt.tile_px, "Tile side in pixels")->capture_default_str()->check(CLI::Range(16, 65536));
    c_synth->add_option("--seed", synth.opt.seed, "Run seed")->capture_default_str();

    IndexArgs index;
    auto* c_index = app.add_subcommand("index", "Validate a manifest and report layer extents");
    c_index->add_option("--manifest", index.manifest, "Manifest JSON")->required();
    c_index->add_option("--out", index.out, "Report path (stdout if omitted)");
    add_grid(c_index, index.grid);

    StatsArgs stats;
    auto* c_stats = app.add_subcommand("stats", "Band statistics over the training tiles");
    c_stats->add_option("--manifest", stats.manifest, "Manifest JSON")->required();
    c_stats->add_option("--out", stats.out, "Stats JSON (stdout if omitted)");
    add_grid(c_stats, stats.grid);
    c_stats->add_option("--split", stats.split, "Training tiles: leading count or comma list of ids");
    c_stats->add_option("--chip", stats.chip, "Chip size in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    c_stats->add_option("--length", stats.length, "Number of sampled chips")->capture_default_str()->check(CLI::PositiveNumber);
    c_stats->add_option("--seed", stats.seed, "Run seed")->capture_default_str();

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "Train the logistic water model");
    c_train->add_option("--manifest", tr.manifest, "Manifest JSON")->required();
    c_train->add_option("--stats", tr.stats, "Stats JSON from `geochip stats`")->required();
    c_train->add_option("--out", tr.out, "Model JSON")->required();
    add_grid(c_train, tr.grid);
    c_train->add_option("--split", tr.split, "Training tiles: leading count or comma list of ids");
    c_train->add_option("--seed", tr.cfg.seed, "Run seed")->capture_default_str();
    c_train->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str()->check(CLI::NonNegativeNumber);
    c_train->add_option("--chips-per-epoch", tr.cfg.chips_per_epoch, "Chips per epoch")->capture_default_str()->check(CLI::PositiveNumber);
    c_train->add_option("--batch", tr.cfg.batch_size, "Chips per SGD step")->capture_default_str()->check(CLI::PositiveNumber);
    c_train->add_option("--lr", tr.cfg.lr, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    c_train->add_option("--chip", tr.cfg.chip_px, "Chip size in pixels")->capture_default_str()->check(CLI::PositiveNumber);

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Accuracy and water IoU on the validation tiles");
    c_eval->add_option("--manifest", ev.manifest, "Manifest JSON")->required();
    c_eval->add_option("--model", ev.model, "Model JSON");
    c_eval->add_option("--out", ev.out, "Metrics JSON (stdout if omitted)");
    c_eval->add_option("--predictor", ev.predictor, "model, ndwi or truth")
        ->capture_default_str()
        ->check(CLI::IsMember({"model", "ndwi", "truth"}));
    add_grid(c_eval, ev.grid);
    c_eval->add_option("--split", ev.split, "Training tiles; the rest are evaluated");
    c_eval->add_option("--chip", ev.chip, "Chip size in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    c_eval->add_option("--stride", ev.stride, "Grid stride in pixels (default: --chip)")->check(CLI::PositiveNumber);
    c_eval->add_option("--tau", ev.tau, "NDWI threshold")->capture_default_str();

    PredictArgs pr;
    auto* c_pred = app.add_subcommand("predict", "Predict a water map for a scene");
    c_pred->add_option("--scene", pr.scene, "Scene GeoTIFF (native grid unless --crs/--res)");
    c_pred->add_option("--manifest", pr.manifest, "Manifest JSON (image layers of --tiles)");
    c_pred->add_option("--tiles", pr.tiles, "Tiles to predict: leading count or comma list of ids");
    c_pred->add_option("--model", pr.model, "Model JSON");
    c_pred->add_option("--out", pr.out, "Output GeoTIFF")->required();
    c_pred->add_option("--quicklook", pr.quicklook, "Optional PNG rendering");
    c_pred->add_option("--predictor", pr.predictor, "model, ndwi or identity")
        ->capture_default_str()
        ->check(CLI::IsMember({"model", "ndwi", "identity"}));
    c_pred->add_option("--crs", pr.crs, "Target CRS as an EPSG code");
    c_pred->add_option("--res", pr.res, "Target resolution")->check(CLI::PositiveNumber);
    c_pred->add_option("--patch", pr.patch, "Patch size in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    c_pred->add_option("--stride", pr.stride, "Patch stride in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    c_pred->add_option("--tau", pr.tau, "NDWI threshold")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*c_synth) cmd_synth(synth);
        if (*c_index) cmd_index(index);
        if (*c_stats) cmd_stats(stats);
        if (*c_train) cmd_train(tr);
        if (*c_eval) cmd_eval(ev);
        if (*c_pred) cmd_predict(pr);
    } catch (const Error& e) {
        std::cerr << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}
