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

// Reader and writer for a subset of classic little-endian GeoTIFF:
// 8/16/32-bit chunky samples, tiled or striped, uncompressed or deflate,
// georeferenced by ModelPixelScale+ModelTiepoint or ModelTransformation.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string_view>

#include "geochip/geodesy.hpp"
#include "geochip/image.hpp"

namespace geochip {

enum class SampleType { UInt8, UInt16, Int16, Float32 };

std::string_view to_string(SampleType t) noexcept;
std::size_t bytes_per_sample(SampleType t) noexcept;

enum class Compression { None, Deflate };

struct RasterLayout {
    bool tiled = true;
    std::uint32_t tile_w = 256;
    std::uint32_t tile_h = 256;
    std::uint32_t rows_per_strip = 0;  // striped only

    static RasterLayout tiles(std::uint32_t w, std::uint32_t h) { return {true, w, h, 0}; }
    static RasterLayout strips(std::uint32_t rows) { return {false, 0, 0, rows}; }

    friend bool operator==(const RasterLayout&, const RasterLayout&) = default;
};

struct RasterHeader {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t band_count = 0;
    SampleType sample_type = SampleType::UInt8;
    RasterLayout layout;
    Compression compression = Compression::None;
    GeoTransform geotransform;
    CrsCode crs = CrsCode::wgs84();
    std::optional<double> nodata;

    /// Native extent from the geotransform: gt(0,0) to gt(width,height).
    BoundingBox bounds() const;
};

/// Decoded window of a raster. Pixels outside the raster extent or equal to
/// nodata are invalid and hold the fill value in every band.
struct PixelBlock {
    Image data;
    std::int64_t origin_col = 0;
    std::int64_t origin_row = 0;
    ValidityPlane validity;
};

/// An opened GeoTIFF. The header is immutable after open; read_window may be
/// called concurrently (reads go through pread on a shared descriptor).
class Raster {
public:
    /// Parses and validates the first IFD; no pixel data is read.
    static Raster open(const std::filesystem::path& path);

    const RasterHeader& header() const noexcept;
    const std::filesystem::path& path() const noexcept;

    /// Decodes only the tiles/strips intersecting the window. The window may
    /// extend past the raster extent. Band indices are 0-based.
    PixelBlock read_window(std::int64_t col0, std::int64_t row0, std::size_t w, std::size_t h,
                           std::span<const std::size_t> bands, double fill = 0.0) const;

    /// All bands.
    PixelBlock read_window(std::int64_t col0, std::int64_t row0, std::size_t w, std::size_t h,
                           double fill = 0.0) const;

    /// Number of tiles/strips decoded by this raster (and its copies) so far.
    std::size_t chunks_decoded() const noexcept;

private:
    struct State;
    explicit Raster(std::shared_ptr<State> state) : state_(std::move(state)) {}
    std::shared_ptr<State> state_;
};

inline RasterHeader open_raster(const std::filesystem::path& path) {
    return Raster::open(path).header();
}

struct WriteOptions {
    SampleType sample_type = SampleType::Float32;
    std::optional<double> nodata;
    RasterLayout layout = RasterLayout::tiles(256, 256);
    Compression compression = Compression::None;
};

/// Writes a full raster (channel-major). Integer sample types require every
/// value to be exactly representable; float32 values are rounded to float.
/// Output bytes are a pure function of the inputs.
void write_geotiff(const std::filesystem::path& path, const Image& bands,
                   const GeoTransform& geotransform, CrsCode crs, const WriteOptions& options = {});

}  // namespace geochip
