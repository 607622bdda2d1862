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

// Seeded synthetic water corpus: paired 6-band uint16 images and uint8 masks
// on UTM grids either side of the 23S/24S zone boundary near Rio de Janeiro.

#include <cstdint>
#include <filesystem>

#include "geochip/manifest.hpp"

namespace geochip {

struct SynthOptions {
    std::size_t n_tiles = 8;
    std::size_t tile_px = 768;
    double res = 10.0;
    std::uint64_t seed = 0;
};

/// Water fraction targets are drawn from this range; features are added
/// until the target is reached, so the realized fraction can exceed the
/// upper value by at most one feature.
inline constexpr double kSynthWaterMin = 0.15;
inline constexpr double kSynthWaterMax = 0.40;

/// Image nodata (all bands) and mask nodata.
inline constexpr double kSynthImageNodata = 0;
inline constexpr double kSynthMaskNodata = 255;

/// Writes tile_XX_image.tif / tile_XX_mask.tif and manifest.json into
/// out_dir (created if missing) and returns the manifest. Byte-identical
/// output for identical options. Throws Error(IoError) or Error(InvalidArgument).
Manifest synthesize_corpus(const std::filesystem::path& out_dir, const SynthOptions& opt);

}  // namespace geochip
