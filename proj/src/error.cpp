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
#include "geochip/error.hpp"

namespace geochip {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NotTiff: return "NotTiff";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::MissingGeoreference: return "MissingGeoreference";
    case ErrorCode::UnsupportedCrs: return "UnsupportedCrs";
    case ErrorCode::CorruptData: return "CorruptData";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::InvalidMask: return "InvalidMask";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::ChipTooLarge: return "ChipTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::UnknownBand: return "UnknownBand";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::NonBinaryMask: return "NonBinaryMask";
    case ErrorCode::StrideExceedsPatch: return "StrideExceedsPatch";
    }
    return "Unknown";
}

}  // namespace geochip
