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

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include <fmt/format.h>

#include "geochip/datasets.hpp"
#include "geochip/geotiff.hpp"
#include "geochip/random.hpp"

namespace geochip::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                fmt::format("geochip-test-{}-{}", ::getpid(), counter++);
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path fixtures_dir() { return GEOCHIP_FIXTURES; }

/// Image of small random integers (uint8-representable) with optional holes set to nodata.
inline Image random_image(Rng& rng, std::size_t c, std::size_t h, std::size_t w, int lo = 0,
                          int hi = 200) {
    Image img(c, h, w);
    for (double& v : img.data)
        v = static_cast<double>(lo) + static_cast<double>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
    return img;
}

inline RasterLayer write_layer(const std::filesystem::path& path, const Image& img,
                               const GeoTransform& gt, CrsCode crs, LayerKind kind,
                               WriteOptions opt = {}) {
    write_geotiff(path, img, gt, crs, opt);
    return build_layer(path, kind);
}

}  // namespace geochip::testing
