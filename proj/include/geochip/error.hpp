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

#include <stdexcept>
#include <string>
#include <string_view>

namespace geochip {

enum class ErrorCode {
    // geotiff_io
    NotTiff,
    UnsupportedFeature,
    MissingGeoreference,
    UnsupportedCrs,
    CorruptData,
    IoError,
    InvalidArgument,
    // geodesy
    OutOfDomain,
    // datasets
    InvalidMask,
    SchemaMismatch,
    EmptyIntersection,
    NoOverlap,
    InvalidManifest,
    // samplers
    ChipTooLarge,
    ShapeMismatch,
    EmptyBatch,
    // transforms / model
    UnknownBand,
    NoValidPixels,
    NonBinaryMask,
    // inference
    StrideExceedsPatch,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every module reports failures through this one exception type; the code is
/// what the CLI prints as the machine-readable part of its error line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace geochip
