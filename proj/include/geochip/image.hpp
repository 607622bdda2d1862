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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace geochip {

/// Row-major [H][W] plane.
template <typename T>
struct Plane {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<T> data;

    Plane() = default;
    Plane(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), data(h * w, fill) {}

    std::size_t size() const noexcept { return data.size(); }
    T& operator()(std::size_t r, std::size_t c) { return data[r * width + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data[r * width + c]; }

    friend bool operator==(const Plane&, const Plane&) = default;
};

/// Channel-major [C][H][W] float64 image.
struct Image {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    std::size_t pixels() const noexcept { return height * width; }

    std::span<double> channel(std::size_t c) {
        return {data.data() + c * pixels(), pixels()};
    }
    std::span<const double> channel(std::size_t c) const {
        return {data.data() + c * pixels(), pixels()};
    }

    double& operator()(std::size_t c, std::size_t r, std::size_t col) {
        return data[(c * height + r) * width + col];
    }
    double operator()(std::size_t c, std::size_t r, std::size_t col) const {
        return data[(c * height + r) * width + col];
    }

    friend bool operator==(const Image&, const Image&) = default;
};

/// Validity planes use uint8 rather than bool so spans and OpenMP loops work on them.
using ValidityPlane = Plane<std::uint8_t>;
using MaskPlane = Plane<std::int32_t>;

}  // namespace geochip
