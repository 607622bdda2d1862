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
#include "geochip/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "geochip/error.hpp"
#include "geochip/kernels.hpp"
#include "geochip/spatial_index.hpp"

namespace geochip {

namespace {

// Spacing (target pixels) of exactly transformed control points when the
// leaf CRS differs from the target CRS; positions in between are bilinearly
// interpolated. Control points sit on global multiples of the step so a
// target pixel always gets the same source position whichever chip asks.
constexpr std::int64_t kControlStep = 16;

constexpr double kSnapEps = 1e-6;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

struct GridFrame {
    CrsCode crs;
    double res;
    double anchor_x;
    double anchor_y;
    GridWindow win;

    BoundingBox box() const {
        return {anchor_x + static_cast<double>(win.col0) * res,
                anchor_x + static_cast<double>(win.col0 + static_cast<std::int64_t>(win.width)) * res,
                anchor_y - static_cast<double>(win.row0 + static_cast<std::int64_t>(win.height)) * res,
                anchor_y - static_cast<double>(win.row0) * res, crs};
    }
    // Centre of global target pixel (gc, gr).
    XY centre(std::int64_t gc, std::int64_t gr) const {
        return {anchor_x + (static_cast<double>(gc) + 0.5) * res,
                anchor_y - (static_cast<double>(gr) + 0.5) * res};
    }
};

struct Partial {
    Image image;
    std::optional<MaskPlane> mask;
    ValidityPlane valid;
    std::size_t valid_count = 0;
};

std::size_t count_valid(const ValidityPlane& v) {
    return static_cast<std::size_t>(std::count(v.data.begin(), v.data.end(), std::uint8_t{1}));
}

// Source-pixel positions (pixel centres at integers) of every target pixel.
kernels::SamplePositions source_positions(const GridFrame& g, const RasterHeader& hdr) {
    kernels::SamplePositions pos;
    pos.height = g.win.height;
    pos.width = g.win.width;
    pos.col.resize(pos.height * pos.width);
    pos.row.resize(pos.height * pos.width);
    const GeoTransform& gt = hdr.geotransform;

    if (g.crs == hdr.crs) {
        std::vector<double> us(pos.width);
        for (std::size_t c = 0; c < pos.width; ++c) {
            const XY p = g.centre(g.win.col0 + static_cast<std::int64_t>(c), 0);
            us[c] = (p.x - gt.origin_x) / gt.pixel_w - 0.5;
        }
        for (std::size_t r = 0; r < pos.height; ++r) {
            const XY p = g.centre(0, g.win.row0 + static_cast<std::int64_t>(r));
            const double v = (p.y - gt.origin_y) / gt.pixel_h - 0.5;
            std::copy(us.begin(), us.end(), pos.col.begin() + static_cast<std::ptrdiff_t>(r * pos.width));
            std::fill_n(pos.row.begin() + static_cast<std::ptrdiff_t>(r * pos.width), pos.width, v);
        }
        return pos;
    }

    const std::int64_t mc0 = floor_div(g.win.col0, kControlStep);
    const std::int64_t mc1 =
        floor_div(g.win.col0 + static_cast<std::int64_t>(g.win.width) - 1, kControlStep) + 1;
    const std::int64_t mr0 = floor_div(g.win.row0, kControlStep);
    const std::int64_t mr1 =
        floor_div(g.win.row0 + static_cast<std::int64_t>(g.win.height) - 1, kControlStep) + 1;
    const auto ncx = static_cast<std::size_t>(mc1 - mc0 + 1);
    const auto ncy = static_cast<std::size_t>(mr1 - mr0 + 1);
    std::vector<double> cu(ncx * ncy);
    std::vector<double> cv(ncx * ncy);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < ncy; ++j) {
        for (std::size_t i = 0; i < ncx; ++i) {
            const XY p = g.centre((mc0 + static_cast<std::int64_t>(i)) * kControlStep,
                                  (mr0 + static_cast<std::int64_t>(j)) * kControlStep);
            double u = nan;
            double v = nan;
            try {
                const XY s = transform_point(g.crs, hdr.crs, p.x, p.y);
                const XY px = invert_geotransform(gt, s.x, s.y);
                u = px.x - 0.5;
                v = px.y - 0.5;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::OutOfDomain) throw;
            }
            cu[j * ncx + i] = u;
            cv[j * ncx + i] = v;
        }
    }
    auto lerp = [](double a, double b, double t) { return t == 0 ? a : a + t * (b - a); };
    for (std::size_t r = 0; r < pos.height; ++r) {
        const std::int64_t gr = g.win.row0 + static_cast<std::int64_t>(r);
        const std::int64_t mr = floor_div(gr, kControlStep);
        const double tv = static_cast<double>(gr - mr * kControlStep) / kControlStep;
        const auto j = static_cast<std::size_t>(mr - mr0);
        for (std::size_t c = 0; c < pos.width; ++c) {
            const std::int64_t gc = g.win.col0 + static_cast<std::int64_t>(c);
            const std::int64_t mc = floor_div(gc, kControlStep);
            const double tu = static_cast<double>(gc - mc * kControlStep) / kControlStep;
            const auto i = static_cast<std::size_t>(mc - mc0);
            const std::size_t k00 = j * ncx + i;
            const std::size_t k10 = k00 + 1;
            const std::size_t k01 = k00 + ncx;
            const std::size_t k11 = k01 + 1;
            const double u = lerp(lerp(cu[k00], cu[k10], tu), lerp(cu[k01], cu[k11], tu), tv);
            const double v = lerp(lerp(cv[k00], cv[k10], tu), lerp(cv[k01], cv[k11], tu), tv);
            pos.col[r * pos.width + c] = u;
            pos.row[r * pos.width + c] = v;
        }
    }
    return pos;
}

}  // namespace

std::string_view to_string(LayerKind k) noexcept {
    return k == LayerKind::Image ? "image" : "mask";
}

LayerKind layer_kind_from(std::string_view s) {
    if (s == "image") return LayerKind::Image;
    if (s == "mask") return LayerKind::Mask;
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown layer kind '{}'", s));
}

RasterLayer build_layer(const std::filesystem::path& path, LayerKind kind) {
    Raster raster = Raster::open(path);
    if (kind == LayerKind::Mask && raster.header().band_count != 1)
        throw Error(ErrorCode::InvalidMask,
                    fmt::format("{}: mask layers must have one band, found {}", path.string(),
                                raster.header().band_count));
    const BoundingBox native = raster.header().bounds();
    return {std::move(raster), kind, native};
}

// -- expression nodes -------------------------------------------------------------

struct DatasetExpr::Node {
    enum class Op { Leaf, Union, Intersection };

    Op op = Op::Leaf;
    CrsCode crs = CrsCode::wgs84();
    double res = 0;
    BoundingBox bounds;
    std::size_t image_channels = 0;
    bool has_mask = false;
    std::optional<RasterLayer> layer;
    // Union: flattened members in precedence order. Intersection: {left, right}.
    std::vector<std::shared_ptr<const Node>> operands;
    BoxIndex index;

    Partial empty(const GridFrame& g) const {
        Partial p;
        p.image = Image(image_channels, g.win.height, g.win.width, 0.0);
        if (has_mask) p.mask = MaskPlane(g.win.height, g.win.width, 0);
        p.valid = ValidityPlane(g.win.height, g.win.width, 0);
        return p;
    }

    Partial evaluate(const GridFrame& g) const {
        switch (op) {
        case Op::Leaf: return evaluate_leaf(g);
        case Op::Union: return evaluate_union(g);
        case Op::Intersection: return evaluate_intersection(g);
        }
        return empty(g);
    }

    Partial evaluate_leaf(const GridFrame& g) const {
        Partial out = empty(g);
        if (!bounds.intersects(g.box())) return out;
        const RasterHeader& hdr = layer->header();
        kernels::SamplePositions pos = source_positions(g, hdr);

        double umin = std::numeric_limits<double>::infinity();
        double umax = -umin;
        double vmin = umin;
        double vmax = -umin;
        for (std::size_t t = 0; t < pos.col.size(); ++t) {
            if (!std::isfinite(pos.col[t]) || !std::isfinite(pos.row[t])) continue;
            umin = std::min(umin, pos.col[t]);
            umax = std::max(umax, pos.col[t]);
            vmin = std::min(vmin, pos.row[t]);
            vmax = std::max(vmax, pos.row[t]);
        }
        if (!(umin <= umax)) return out;
        // Covering window with one pixel of padding, clipped to one pixel
        // beyond the raster extent.
        const auto w_max = static_cast<double>(hdr.width);
        const auto h_max = static_cast<double>(hdr.height);
        const double c0 = std::max(std::floor(umin) - 1, -1.0);
        const double c1 = std::min(std::ceil(umax) + 1, w_max);
        const double r0 = std::max(std::floor(vmin) - 1, -1.0);
        const double r1 = std::min(std::ceil(vmax) + 1, h_max);
        if (c0 > c1 || r0 > r1 || c1 < 0 || r1 < 0 || c0 >= w_max || r0 >= h_max) return out;
        const auto wc0 = static_cast<std::int64_t>(c0);
        const auto wr0 = static_cast<std::int64_t>(r0);
        const auto ww = static_cast<std::size_t>(c1 - c0 + 1);
        const auto wh = static_cast<std::size_t>(r1 - r0 + 1);
        for (std::size_t t = 0; t < pos.col.size(); ++t) {
            pos.col[t] -= c0;
            pos.row[t] -= r0;
        }

        const PixelBlock block = layer->raster.read_window(wc0, wr0, ww, wh, 0.0);
        if (layer->kind == LayerKind::Image) {
            kernels::resample_bilinear(block.data, block.validity, pos, out.image, out.valid);
        } else {
            Image labels;
            kernels::resample_nearest(block.data, block.validity, pos, labels, out.valid);
            auto& mask = *out.mask;
            for (std::size_t t = 0; t < mask.size(); ++t)
                mask.data[t] = out.valid.data[t] ? static_cast<std::int32_t>(labels.data[t]) : 0;
        }
        out.valid_count = count_valid(out.valid);
        return out;
    }

    Partial evaluate_union(const GridFrame& g) const {
        Partial out = empty(g);
        const std::size_t n = g.win.width * g.win.height;
        const std::size_t plane = n;
        for (std::size_t i : index.query(g.box())) {
            const Partial p = operands[i]->evaluate(g);
            if (p.valid_count == 0) continue;
            for (std::size_t t = 0; t < n; ++t) {
                if (out.valid.data[t] || !p.valid.data[t]) continue;
                for (std::size_t c = 0; c < image_channels; ++c)
                    out.image.data[c * plane + t] = p.image.data[c * plane + t];
                if (has_mask) out.mask->data[t] = p.mask->data[t];
                out.valid.data[t] = 1;
                ++out.valid_count;
            }
            if (out.valid_count == n) break;
        }
        return out;
    }

    Partial evaluate_intersection(const GridFrame& g) const {
        if (!bounds.intersects(g.box())) return empty(g);
        Partial left = operands[0]->evaluate(g);
        if (left.valid_count == 0) return empty(g);
        Partial right = operands[1]->evaluate(g);
        if (right.valid_count == 0) return empty(g);

        Partial out;
        out.image = Image(image_channels, g.win.height, g.win.width);
        std::copy(left.image.data.begin(), left.image.data.end(), out.image.data.begin());
        std::copy(right.image.data.begin(), right.image.data.end(),
                  out.image.data.begin() + static_cast<std::ptrdiff_t>(left.image.data.size()));
        out.mask = left.mask ? std::move(left.mask) : std::move(right.mask);
        out.valid = std::move(left.valid);
        const std::size_t plane = out.image.pixels();
        for (std::size_t t = 0; t < plane; ++t) {
            out.valid.data[t] = out.valid.data[t] && right.valid.data[t];
            if (out.valid.data[t]) {
                ++out.valid_count;
                continue;
            }
            for (std::size_t c = 0; c < image_channels; ++c) out.image.data[c * plane + t] = 0.0;
            if (out.mask) out.mask->data[t] = 0;
        }
        return out;
    }

    void collect_leaves(std::vector<const RasterLayer*>& out) const {
        if (op == Op::Leaf) {
            out.push_back(&*layer);
            return;
        }
        for (const auto& o : operands) o->collect_leaves(out);
    }

    bool intersects(const BoundingBox& q) const {
        if (!bounds.intersects(q)) return false;
        switch (op) {
        case Op::Leaf: return true;
        case Op::Intersection: return true;
        case Op::Union:
            for (std::size_t i : index.query(q))
                if (operands[i]->intersects(q)) return true;
            return false;
        }
        return false;
    }
};

namespace {

void require_same_grid(CrsCode ca, double ra, CrsCode cb, double rb, const char* op) {
    if (!(ca == cb) || ra != rb)
        throw Error(ErrorCode::SchemaMismatch,
                    fmt::format("{}: target grids differ ({} @ {} vs {} @ {})", op, ca.name(), ra,
                                cb.name(), rb));
}

}  // namespace

DatasetExpr DatasetExpr::leaf(RasterLayer layer, CrsCode target_crs, double target_res) {
    if (!(target_res > 0) || !std::isfinite(target_res))
        throw Error(ErrorCode::InvalidArgument, "target resolution must be positive");
    auto node = std::make_shared<Node>();
    node->op = Node::Op::Leaf;
    node->crs = target_crs;
    node->res = target_res;
    node->bounds = reproject_bbox(layer.bounds_native, target_crs, kBoundsDensify);
    node->image_channels = layer.kind == LayerKind::Image ? layer.header().band_count : 0;
    node->has_mask = layer.kind == LayerKind::Mask;
    node->layer = std::move(layer);
    return DatasetExpr(std::move(node));
}

DatasetExpr operator|(const DatasetExpr& a, const DatasetExpr& b) {
    const auto& na = *a.node_;
    const auto& nb = *b.node_;
    require_same_grid(na.crs, na.res, nb.crs, nb.res, "union");
    if (na.image_channels != nb.image_channels || na.has_mask != nb.has_mask)
        throw Error(ErrorCode::SchemaMismatch,
                    fmt::format("union: channel schemas differ ({}{} vs {}{})", na.image_channels,
                                na.has_mask ? "+mask" : "", nb.image_channels,
                                nb.has_mask ? "+mask" : ""));
    auto node = std::make_shared<DatasetExpr::Node>();
    node->op = DatasetExpr::Node::Op::Union;
    node->crs = na.crs;
    node->res = na.res;
    node->bounds = hull(na.bounds, nb.bounds);
    node->image_channels = na.image_channels;
    node->has_mask = na.has_mask;
    for (const auto* side : {&a.node_, &b.node_}) {
        if ((*side)->op == DatasetExpr::Node::Op::Union)
            node->operands.insert(node->operands.end(), (*side)->operands.begin(),
                                  (*side)->operands.end());
        else
            node->operands.push_back(*side);
    }
    std::vector<BoundingBox> boxes;
    boxes.reserve(node->operands.size());
    for (const auto& o : node->operands) boxes.push_back(o->bounds);
    node->index = BoxIndex(std::move(boxes));
    return DatasetExpr(std::move(node));
}

DatasetExpr operator&(const DatasetExpr& a, const DatasetExpr& b) {
    const auto& na = *a.node_;
    const auto& nb = *b.node_;
    require_same_grid(na.crs, na.res, nb.crs, nb.res, "intersection");
    if (na.has_mask && nb.has_mask)
        throw Error(ErrorCode::SchemaMismatch, "intersection: both operands carry a mask");
    const BoundingBox overlap = intersection(na.bounds, nb.bounds);
    if (!overlap.valid())
        throw Error(ErrorCode::EmptyIntersection, "intersection: operand bounds do not overlap");
    auto node = std::make_shared<DatasetExpr::Node>();
    node->op = DatasetExpr::Node::Op::Intersection;
    node->crs = na.crs;
    node->res = na.res;
    node->bounds = overlap;
    node->image_channels = na.image_channels + nb.image_channels;
    node->has_mask = na.has_mask || nb.has_mask;
    node->operands = {a.node_, b.node_};
    return DatasetExpr(std::move(node));
}

CrsCode DatasetExpr::target_crs() const noexcept { return node_->crs; }
double DatasetExpr::target_res() const noexcept { return node_->res; }
const BoundingBox& DatasetExpr::bounds() const noexcept { return node_->bounds; }
std::size_t DatasetExpr::image_channels() const noexcept { return node_->image_channels; }
bool DatasetExpr::has_mask() const noexcept { return node_->has_mask; }

std::vector<BoundingBox> DatasetExpr::sampling_regions() const {
    if (node_->op != Node::Op::Union) return {node_->bounds};
    std::vector<BoundingBox> out;
    out.reserve(node_->operands.size());
    for (const auto& o : node_->operands) out.push_back(o->bounds);
    return out;
}

std::vector<const RasterLayer*> DatasetExpr::leaves() const {
    std::vector<const RasterLayer*> out;
    node_->collect_leaves(out);
    return out;
}

bool DatasetExpr::intersects(const BoundingBox& q) const {
    return node_->intersects(q);
}

GridWindow DatasetExpr::snap(const BoundingBox& q) const {
    const double ax = node_->bounds.minx;
    const double ay = node_->bounds.maxy;
    const double res = node_->res;
    const auto c0 = static_cast<std::int64_t>(std::floor((q.minx - ax) / res + kSnapEps));
    auto c1 = static_cast<std::int64_t>(std::ceil((q.maxx - ax) / res - kSnapEps));
    const auto r0 = static_cast<std::int64_t>(std::floor((ay - q.maxy) / res + kSnapEps));
    auto r1 = static_cast<std::int64_t>(std::ceil((ay - q.miny) / res - kSnapEps));
    c1 = std::max(c1, c0 + 1);
    r1 = std::max(r1, r0 + 1);
    return {c0, r0, static_cast<std::size_t>(c1 - c0), static_cast<std::size_t>(r1 - r0)};
}

BoundingBox DatasetExpr::window_box(const GridWindow& w) const {
    return GridFrame{node_->crs, node_->res, node_->bounds.minx, node_->bounds.maxy, w}.box();
}

Sample DatasetExpr::materialize(const BoundingBox& q) const {
    if (!(q.crs == node_->crs))
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("query is in {}, expression grid is {}", q.crs.name(),
                                node_->crs.name()));
    if (!q.valid()) throw Error(ErrorCode::InvalidArgument, "query box has non-positive extent");
    if (!q.intersects(node_->bounds))
        throw Error(ErrorCode::NoOverlap, "query box does not overlap the dataset bounds");
    return materialize(snap(q));
}

Sample DatasetExpr::materialize(const GridWindow& w) const {
    if (w.width == 0 || w.height == 0)
        throw Error(ErrorCode::InvalidArgument, "empty grid window");
    const GridFrame frame{node_->crs, node_->res, node_->bounds.minx, node_->bounds.maxy, w};
    if (!frame.box().intersects(node_->bounds))
        throw Error(ErrorCode::NoOverlap, "grid window does not overlap the dataset bounds");
    Partial p = node_->evaluate(frame);
    Sample s;
    s.image = std::move(p.image);
    s.mask = std::move(p.mask);
    s.validity = std::move(p.valid);
    s.bbox = frame.box();
    return s;
}

}  // namespace geochip
