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
#include "geochip/manifest.hpp"

#include <algorithm>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "geochip/error.hpp"

namespace geochip {

using nlohmann::json;

std::vector<std::string> Manifest::tile_ids() const {
    std::vector<std::string> ids;
    for (const auto& l : layers)
        if (std::find(ids.begin(), ids.end(), l.tile) == ids.end()) ids.push_back(l.tile);
    return ids;
}

std::filesystem::path Manifest::resolve(const ManifestLayer& l) const {
    return l.path.is_absolute() ? l.path : base_dir / l.path;
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("{}: cannot open manifest", path.string()));
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidManifest, fmt::format("{}: {}", path.string(), e.what()));
    }
    Manifest m;
    m.base_dir = path.parent_path();
    try {
        if (doc.at("version").get<int>() != kManifestVersion)
            throw Error(ErrorCode::InvalidManifest,
                        fmt::format("{}: unsupported manifest version {}", path.string(),
                                    doc.at("version").dump()));
        if (doc.contains("band_names"))
            m.band_names = doc.at("band_names").get<std::vector<std::string>>();
        for (std::size_t i = 0; const auto& j : doc.at("layers")) {
            ManifestLayer l;
            l.path = j.at("path").get<std::string>();
            l.kind = layer_kind_from(j.at("kind").get<std::string>());
            l.epsg = j.at("epsg").get<int>();
            const auto b = j.at("bounds").get<std::vector<double>>();
            if (b.size() != 4)
                throw Error(ErrorCode::InvalidManifest, "bounds must be [minx, miny, maxx, maxy]");
            l.bounds = {b[0], b[2], b[1], b[3], CrsCode::from_epsg(l.epsg)};
            l.bands = j.at("bands").get<std::uint32_t>();
            l.tile = j.contains("tile") ? j.at("tile").get<std::string>() : fmt::format("{}", i);
            m.layers.push_back(std::move(l));
            ++i;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidManifest, fmt::format("{}: {}", path.string(), e.what()));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidManifest) throw;
        throw Error(ErrorCode::InvalidManifest, fmt::format("{}: {}", path.string(), e.what()));
    }
    return m;
}

void save_manifest(const std::filesystem::path& path, const Manifest& m) {
    json doc;
    doc["version"] = kManifestVersion;
    if (!m.band_names.empty()) doc["band_names"] = m.band_names;
    doc["layers"] = json::array();
    for (const auto& l : m.layers) {
        doc["layers"].push_back({{"path", l.path.generic_string()},
                                 {"kind", std::string(to_string(l.kind))},
                                 {"epsg", l.epsg},
                                 {"bounds", {l.bounds.minx, l.bounds.miny, l.bounds.maxx, l.bounds.maxy}},
                                 {"bands", l.bands},
                                 {"tile", l.tile}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("{}: cannot write manifest", path.string()));
    out << doc.dump(2) << '\n';
}

ManifestLayer describe_layer(const RasterLayer& layer, std::filesystem::path relative_path,
                             std::string tile) {
    return {std::move(relative_path), layer.kind, layer.header().crs.epsg(), layer.bounds_native,
            layer.header().band_count, std::move(tile)};
}

DatasetExpr tile_expr(const Manifest& m, const std::string& tile, CrsCode crs, double res) {
    std::optional<DatasetExpr> image;
    std::optional<DatasetExpr> mask;
    for (const auto& l : m.layers) {
        if (l.tile != tile) continue;
        auto leaf = DatasetExpr::leaf(build_layer(m.resolve(l), l.kind), crs, res);
        auto& slot = l.kind == LayerKind::Image ? image : mask;
        slot = slot ? (*slot | leaf) : leaf;
    }
    if (!image)
        throw Error(ErrorCode::InvalidManifest, fmt::format("tile '{}' has no image layer", tile));
    return mask ? (*image & *mask) : *image;
}

DatasetExpr corpus_expr(const Manifest& m, const std::vector<std::string>& tiles, CrsCode crs,
                        double res) {
    if (tiles.empty()) throw Error(ErrorCode::InvalidArgument, "no tiles selected");
    std::optional<DatasetExpr> out;
    for (const auto& t : tiles) {
        auto e = tile_expr(m, t, crs, res);
        out = out ? (*out | e) : e;
    }
    return *out;
}

}  // namespace geochip
