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

// Per-pixel inner loops. The functions in geochip::kernels are OpenMP
// parallel and used by the library; geochip::kernels::serial holds plain
// single-threaded versions kept as the reference for tests and benchmarks.
//
// Reductions (loss_and_grad) partition pixels into fixed blocks of
// kReductionBlock and sum block partials in block order, so results do not
// depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "geochip/image.hpp"

namespace geochip::kernels {

inline constexpr std::size_t kReductionBlock = 4096;

/// Sample positions snap to the nearest integer when closer than this (in
/// source pixels), so same-grid resampling copies pixels exactly.
inline constexpr double kSnapTolerance = 1e-6;

/// Fractional source positions for each target pixel, row-major [H][W].
/// Integer values land on source pixel centres.
struct SamplePositions {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> col;
    std::vector<double> row;
};

/// Bilinear resample of `src` at `pos`. A target pixel is valid iff the
/// nearest source pixel is valid; the value is the weight-renormalised mean
/// of the valid taps. dst/dst_valid are resized.
void resample_bilinear(const Image& src, const ValidityPlane& src_valid,
                       const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid);

/// Nearest-neighbour resample; output values are always copies of source values.
void resample_nearest(const Image& src, const ValidityPlane& src_valid,
                      const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid);

/// (x - mean[c]) / std[c] on valid pixels, in place.
void normalize(Image& img, const ValidityPlane& valid, std::span<const double> means,
               std::span<const double> stds);

/// (a - b) / (a + b), zero where a + b == 0.
void normalized_difference(std::span<const double> a, std::span<const double> b,
                           std::span<double> out);

/// logit = sum_c w[c] * x[c] + bias, per pixel.
void logits(const Image& img, std::span<const double> w, double bias, std::span<double> out);

/// Sums of BCE loss and (p - y) * [x, 1] over valid pixels of one image.
struct LossGradSums {
    double loss = 0;
    std::vector<double> grad;  // size C + 1; last entry is the bias term
    std::size_t count = 0;
};
LossGradSums loss_and_grad(const Image& img, const MaskPlane& labels, const ValidityPlane& valid,
                           std::span<const double> w, double bias);

namespace serial {

void resample_bilinear(const Image& src, const ValidityPlane& src_valid,
                       const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid);
void resample_nearest(const Image& src, const ValidityPlane& src_valid,
                      const SamplePositions& pos, Image& dst, ValidityPlane& dst_valid);
void normalize(Image& img, const ValidityPlane& valid, std::span<const double> means,
               std::span<const double> stds);
void normalized_difference(std::span<const double> a, std::span<const double> b,
                           std::span<double> out);
void logits(const Image& img, std::span<const double> w, double bias, std::span<double> out);
LossGradSums loss_and_grad(const Image& img, const MaskPlane& labels, const ValidityPlane& valid,
                           std::span<const double> w, double bias);

}  // namespace serial

/// Numerically stable per-pixel pieces shared by both implementations.
double sigmoid(double z) noexcept;
double bce_with_logit(double z, double y) noexcept;

}  // namespace geochip::kernels
