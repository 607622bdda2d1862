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
#include "geochip/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace geochip::kernels {

namespace {

using Index = std::ptrdiff_t;

double snap(double u) noexcept {
    const double r = std::nearbyint(u);
    return std::abs(u - r) < kSnapTolerance ? r : u;
}

bool tap_ok(const ValidityPlane& sv, Index i, Index j) noexcept {
    return i >= 0 && j >= 0 && static_cast<std::size_t>(i) < sv.width &&
           static_cast<std::size_t>(j) < sv.height && sv(j, i) != 0;
}

// Writes C channel values for target pixel t; returns validity.
bool bilinear_pixel(const Image& src, const ValidityPlane& sv, double u, double v, Image& dst,
                    std::size_t t) noexcept {
    if (!std::isfinite(u) || !std::isfinite(v)) return false;
    u = snap(u);
    v = snap(v);
    const auto ni = static_cast<Index>(std::floor(u + 0.5));
    const auto nj = static_cast<Index>(std::floor(v + 0.5));
    if (!tap_ok(sv, ni, nj)) return false;

    const auto i0 = static_cast<Index>(std::floor(u));
    const auto j0 = static_cast<Index>(std::floor(v));
    const double fu = u - static_cast<double>(i0);
    const double fv = v - static_cast<double>(j0);
    const double wts[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv, fu * fv};
    const Index ti[4] = {i0, i0 + 1, i0, i0 + 1};
    const Index tj[4] = {j0, j0, j0 + 1, j0 + 1};

    bool use[4];
    double wsum = 0;
    for (int k = 0; k < 4; ++k) {
        use[k] = wts[k] > 0 && tap_ok(sv, ti[k], tj[k]);
        if (use[k]) wsum += wts[k];
    }
    const std::size_t plane = dst.pixels();
    const std::size_t src_plane = src.pixels();
    for (std::size_t c = 0; c < src.channels; ++c) {
        double acc = 0;
        for (int k = 0; k < 4; ++k) {
            if (!use[k]) continue;
            acc += wts[k] * src.data[c * src_plane + static_cast<std::size_t>(tj[k]) * src.width +
                                     static_cast<std::size_t>(ti[k])];
        }
        dst.data[c * plane + t] = acc / wsum;
    }
    return true;
}

bool nearest_pixel(const Image& src, const ValidityPlane& sv, double u, double v, Image& dst,
                   std::size_t t) noexcept {
    if (!std::isfinite(u) || !std::isfinite(v)) return false;
    const auto ni = static_cast<Index>(std::floor(snap(u) + 0.5));
    const auto nj = static_cast<Index>(std::floor(snap(v) + 0.5));
    if (!tap_ok(sv, ni, nj)) return false;
    const std::size_t plane = dst.pixels();
    const std::size_t src_plane = src.pixels();
    const std::size_t s = static_cast<std::size_t>(nj) * src.width + static_cast<std::size_t>(ni);
    for (std::size_t c = 0; c < src.channels; ++c) dst.data[c * plane + t] = src.data[c * src_plane + s];
    return true;
}

void prepare(const Image& src, const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid) {
    dst = Image(src.channels, pos.height, pos.width, 0.0);
    dst_valid = ValidityPlane(pos.height, pos.width, 0);
}

}  // namespace

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_with_logit(double z, double y) noexcept {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

// -- parallel ---------------------------------------------------------------------

void resample_bilinear(const Image& src, const ValidityPlane& src_valid,
                       const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid) {
    prepare(src, pos, dst, dst_valid);
    const auto n = static_cast<Index>(pos.height * pos.width);
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < n; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        dst_valid.data[ut] = bilinear_pixel(src, src_valid, pos.col[ut], pos.row[ut], dst, ut) ? 1 : 0;
    }
}

void resample_nearest(const Image& src, const ValidityPlane& src_valid,
                      const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid) {
    prepare(src, pos, dst, dst_valid);
    const auto n = static_cast<Index>(pos.height * pos.width);
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < n; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        dst_valid.data[ut] = nearest_pixel(src, src_valid, pos.col[ut], pos.row[ut], dst, ut) ? 1 : 0;
    }
}

void normalize(Image& img, const ValidityPlane& valid, std::span<const double> means,
               std::span<const double> stds) {
    const std::size_t plane = img.pixels();
    const auto n = static_cast<Index>(plane);
    for (std::size_t c = 0; c < img.channels; ++c) {
        double* ch = img.data.data() + c * plane;
        const double m = means[c];
        const double s = stds[c];
#pragma omp parallel for schedule(static)
        for (Index t = 0; t < n; ++t) {
            if (valid.data[static_cast<std::size_t>(t)]) ch[t] = (ch[t] - m) / s;
        }
    }
}

void normalized_difference(std::span<const double> a, std::span<const double> b,
                           std::span<double> out) {
    const auto n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < n; ++t) {
        const double s = a[t] + b[t];
        out[t] = s == 0 ? 0.0 : (a[t] - b[t]) / s;
    }
}

void logits(const Image& img, std::span<const double> w, double bias, std::span<double> out) {
    const std::size_t plane = img.pixels();
    const auto n = static_cast<Index>(plane);
    const std::size_t channels = img.channels;
    const double* data = img.data.data();
#pragma omp parallel for schedule(static)
    for (Index t = 0; t < n; ++t) {
        double z = bias;
        for (std::size_t c = 0; c < channels; ++c) z += w[c] * data[c * plane + t];
        out[t] = z;
    }
}

LossGradSums loss_and_grad(const Image& img, const MaskPlane& labels, const ValidityPlane& valid,
                           std::span<const double> w, double bias) {
    const std::size_t plane = img.pixels();
    const std::size_t channels = img.channels;
    const std::size_t n_blocks = (plane + kReductionBlock - 1) / kReductionBlock;
    const std::size_t stride = channels + 2;  // grad[C+1], loss
    std::vector<double> partial(n_blocks * stride, 0.0);
    std::vector<std::size_t> counts(n_blocks, 0);
    const double* data = img.data.data();

#pragma omp parallel for schedule(static)
    for (Index blk = 0; blk < static_cast<Index>(n_blocks); ++blk) {
        const std::size_t b = static_cast<std::size_t>(blk);
        double* acc = partial.data() + b * stride;
        std::size_t count = 0;
        const std::size_t end = std::min(plane, (b + 1) * kReductionBlock);
        for (std::size_t t = b * kReductionBlock; t < end; ++t) {
            if (!valid.data[t]) continue;
            double z = bias;
            for (std::size_t c = 0; c < channels; ++c) z += w[c] * data[c * plane + t];
            const double y = labels.data[t];
            const double r = sigmoid(z) - y;
            for (std::size_t c = 0; c < channels; ++c) acc[c] += r * data[c * plane + t];
            acc[channels] += r;
            acc[channels + 1] += bce_with_logit(z, y);
            ++count;
        }
        counts[b] = count;
    }

    LossGradSums out;
    out.grad.assign(channels + 1, 0.0);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const double* acc = partial.data() + b * stride;
        for (std::size_t c = 0; c <= channels; ++c) out.grad[c] += acc[c];
        out.loss += acc[channels + 1];
        out.count += counts[b];
    }
    return out;
}

// -- serial reference -------------------------------------------------------------

namespace serial {

void resample_bilinear(const Image& src, const ValidityPlane& src_valid,
                       const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid) {
    prepare(src, pos, dst, dst_valid);
    for (std::size_t t = 0; t < pos.height * pos.width; ++t)
        dst_valid.data[t] = bilinear_pixel(src, src_valid, pos.col[t], pos.row[t], dst, t) ? 1 : 0;
}

void resample_nearest(const Image& src, const ValidityPlane& src_valid,
                      const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid) {
    prepare(src, pos, dst, dst_valid);
    for (std::size_t t = 0; t < pos.height * pos.width; ++t)
        dst_valid.data[t] = nearest_pixel(src, src_valid, pos.col[t], pos.row[t], dst, t) ? 1 : 0;
}

void normalize(Image& img, const ValidityPlane& valid, std::span<const double> means,
               std::span<const double> stds) {
    for (std::size_t c = 0; c < img.channels; ++c) {
        auto ch = img.channel(c);
        for (std::size_t t = 0; t < ch.size(); ++t)
            if (valid.data[t]) ch[t] = (ch[t] - means[c]) / stds[c];
    }
}

void normalized_difference(std::span<const double> a, std::span<const double> b,
                           std::span<double> out) {
    for (std::size_t t = 0; t < out.size(); ++t) {
        const double s = a[t] + b[t];
        out[t] = s == 0 ? 0.0 : (a[t] - b[t]) / s;
    }
}

void logits(const Image& img, std::span<const double> w, double bias, std::span<double> out) {
    for (std::size_t t = 0; t < img.pixels(); ++t) {
        double z = bias;
        for (std::size_t c = 0; c < img.channels; ++c) z += w[c] * img.channel(c)[t];
        out[t] = z;
    }
}

LossGradSums loss_and_grad(const Image& img, const MaskPlane& labels, const ValidityPlane& valid,
                           std::span<const double> w, double bias) {
    LossGradSums out;
    out.grad.assign(img.channels + 1, 0.0);
    for (std::size_t t = 0; t < img.pixels(); ++t) {
        if (!valid.data[t]) continue;
        double z = bias;
        for (std::size_t c = 0; c < img.channels; ++c) z += w[c] * img.channel(c)[t];
        const double y = labels.data[t];
        const double r = sigmoid(z) - y;
        for (std::size_t c = 0; c < img.channels; ++c) out.grad[c] += r * img.channel(c)[t];
        out.grad[img.channels] += r;
        out.loss += bce_with_logit(z, y);
        ++out.count;
    }
    return out;
}

}  // namespace serial

}  // namespace geochip::kernels
