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
#include "geochip/geotiff.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <zlib.h>

#include "geochip/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "the TIFF codec assumes a little-endian host");

namespace geochip {

namespace {

// TIFF tags
constexpr std::uint16_t kImageWidth = 256;
constexpr std::uint16_t kImageLength = 257;
constexpr std::uint16_t kBitsPerSample = 258;
constexpr std::uint16_t kCompression = 259;
constexpr std::uint16_t kPhotometric = 262;
constexpr std::uint16_t kStripOffsets = 273;
constexpr std::uint16_t kSamplesPerPixel = 277;
constexpr std::uint16_t kRowsPerStrip = 278;
constexpr std::uint16_t kStripByteCounts = 279;
constexpr std::uint16_t kPlanarConfig = 284;
constexpr std::uint16_t kPredictor = 317;
constexpr std::uint16_t kTileWidth = 322;
constexpr std::uint16_t kTileLength = 323;
constexpr std::uint16_t kTileOffsets = 324;
constexpr std::uint16_t kTileByteCounts = 325;
constexpr std::uint16_t kExtraSamples = 338;
constexpr std::uint16_t kSampleFormat = 339;
constexpr std::uint16_t kModelPixelScale = 33550;
constexpr std::uint16_t kModelTiepoint = 33922;
constexpr std::uint16_t kModelTransformation = 34264;
constexpr std::uint16_t kGeoKeyDirectory = 34735;
constexpr std::uint16_t kGdalNodata = 42113;

// GeoKeys
constexpr std::uint16_t kGTModelTypeGeoKey = 1024;
constexpr std::uint16_t kGTRasterTypeGeoKey = 1025;
constexpr std::uint16_t kGeographicTypeGeoKey = 2048;
constexpr std::uint16_t kProjectedCSTypeGeoKey = 3072;

constexpr std::uint16_t kModelTypeProjected = 1;
constexpr std::uint16_t kModelTypeGeographic = 2;
constexpr std::uint16_t kRasterPixelIsArea = 1;
constexpr std::uint16_t kRasterPixelIsPoint = 2;

// Field types
enum FieldType : std::uint16_t {
    kByte = 1,
    kAscii = 2,
    kShort = 3,
    kLong = 4,
    kRational = 5,
    kSByte = 6,
    kUndefined = 7,
    kSShort = 8,
    kSLong = 9,
    kSRational = 10,
    kFloat = 11,
    kDouble = 12,
};

std::size_t field_size(std::uint16_t type) {
    switch (type) {
    case kByte:
    case kAscii:
    case kSByte:
    case kUndefined: return 1;
    case kShort:
    case kSShort: return 2;
    case kLong:
    case kSLong:
    case kFloat: return 4;
    case kRational:
    case kSRational:
    case kDouble: return 8;
    default: return 0;
    }
}

template <typename T>
T load(const std::uint8_t* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

struct FileDescriptor {
    int fd = -1;
    explicit FileDescriptor(int f) : fd(f) {}
    FileDescriptor(const FileDescriptor&) = delete;
    FileDescriptor& operator=(const FileDescriptor&) = delete;
    ~FileDescriptor() {
        if (fd >= 0) ::close(fd);
    }
};

struct Field {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::vector<std::uint8_t> bytes;

    std::vector<std::uint64_t> as_uints() const {
        std::vector<std::uint64_t> out(count);
        const std::size_t sz = field_size(type);
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto* p = bytes.data() + i * sz;
            switch (type) {
            case kByte:
            case kUndefined: out[i] = p[0]; break;
            case kShort: out[i] = load<std::uint16_t>(p); break;
            case kLong: out[i] = load<std::uint32_t>(p); break;
            default:
                throw Error(ErrorCode::CorruptData,
                            fmt::format("unexpected field type {} for an integer tag", type));
            }
        }
        return out;
    }

    std::vector<double> as_doubles() const {
        std::vector<double> out(count);
        const std::size_t sz = field_size(type);
        for (std::uint32_t i = 0; i < count; ++i) {
            const auto* p = bytes.data() + i * sz;
            switch (type) {
            case kDouble: out[i] = load<double>(p); break;
            case kFloat: out[i] = load<float>(p); break;
            default:
                throw Error(ErrorCode::CorruptData,
                            fmt::format("unexpected field type {} for a floating tag", type));
            }
        }
        return out;
    }

    std::string as_string() const {
        std::string s(bytes.begin(), bytes.end());
        if (auto nul = s.find('\0'); nul != std::string::npos) s.resize(nul);
        return s;
    }
};

SampleType sample_type_from(std::uint64_t bits, std::uint64_t format) {
    if (bits != 8 && bits != 16 && bits != 32)
        throw Error(ErrorCode::UnsupportedFeature,
                    fmt::format("BitsPerSample={} (supported: 8, 16, 32)", bits));
    if (bits == 8 && format == 1) return SampleType::UInt8;
    if (bits == 16 && format == 1) return SampleType::UInt16;
    if (bits == 16 && format == 2) return SampleType::Int16;
    if (bits == 32 && format == 3) return SampleType::Float32;
    throw Error(ErrorCode::UnsupportedFeature,
                fmt::format("sample layout {} bits / SampleFormat {} (supported: uint8, uint16, "
                            "int16, float32)",
                            bits, format));
}

std::string compression_name(std::uint64_t c) {
    switch (c) {
    case 5: return "LZW";
    case 6:
    case 7: return "JPEG";
    case 32773: return "PackBits";
    case 34887: return "LERC";
    case 34925: return "LZMA";
    case 50000: return "ZSTD";
    case 50001: return "WEBP";
    default: return "unknown";
    }
}

double decode_sample(SampleType t, const std::uint8_t* p) {
    switch (t) {
    case SampleType::UInt8: return p[0];
    case SampleType::UInt16: return load<std::uint16_t>(p);
    case SampleType::Int16: return load<std::int16_t>(p);
    case SampleType::Float32: return load<float>(p);
    }
    return 0;
}

}  // namespace

std::string_view to_string(SampleType t) noexcept {
    switch (t) {
    case SampleType::UInt8: return "uint8";
    case SampleType::UInt16: return "uint16";
    case SampleType::Int16: return "int16";
    case SampleType::Float32: return "float32";
    }
    return "unknown";
}

std::size_t bytes_per_sample(SampleType t) noexcept {
    switch (t) {
    case SampleType::UInt8: return 1;
    case SampleType::UInt16:
    case SampleType::Int16: return 2;
    case SampleType::Float32: return 4;
    }
    return 0;
}

BoundingBox RasterHeader::bounds() const {
    const XY ul = apply_geotransform(geotransform, 0, 0);
    const XY lr = apply_geotransform(geotransform, width, height);
    return {ul.x, lr.x, lr.y, ul.y, crs};
}

// -- reader ---------------------------------------------------------------------

struct Raster::State {
    std::filesystem::path path;
    RasterHeader header;
    std::unique_ptr<FileDescriptor> file;
    std::uint64_t file_size = 0;
    std::vector<std::uint64_t> chunk_offsets;
    std::vector<std::uint64_t> chunk_bytes;
    std::uint32_t chunks_across = 0;
    mutable std::atomic<std::size_t> decoded{0};

    void read_at(std::uint64_t offset, std::size_t n, std::uint8_t* dst) const {
        if (offset + n > file_size)
            throw Error(ErrorCode::CorruptData,
                        fmt::format("{}: read of {} bytes at offset {} runs past end of file",
                                    path.string(), n, offset));
        std::size_t done = 0;
        while (done < n) {
            const ssize_t got = ::pread(file->fd, dst + done, n - done,
                                        static_cast<off_t>(offset + done));
            if (got < 0) {
                if (errno == EINTR) continue;
                throw Error(ErrorCode::IoError,
                            fmt::format("{}: {}", path.string(), std::strerror(errno)));
            }
            if (got == 0)
                throw Error(ErrorCode::CorruptData, fmt::format("{}: short read", path.string()));
            done += static_cast<std::size_t>(got);
        }
    }

    // Geometry of chunk i: pixel origin and stored (padded) size.
    struct ChunkGeom {
        std::uint32_t col0, row0, w, h;
    };
    ChunkGeom chunk_geom(std::size_t i) const {
        const auto& l = header.layout;
        if (l.tiled) {
            const auto tx = static_cast<std::uint32_t>(i % chunks_across);
            const auto ty = static_cast<std::uint32_t>(i / chunks_across);
            return {tx * l.tile_w, ty * l.tile_h, l.tile_w, l.tile_h};
        }
        const auto row0 = static_cast<std::uint32_t>(i * l.rows_per_strip);
        return {0, row0, header.width, std::min(l.rows_per_strip, header.height - row0)};
    }

    std::vector<std::uint8_t> decode_chunk(std::size_t i) const {
        const ChunkGeom g = chunk_geom(i);
        const std::size_t expected = std::size_t{g.w} * g.h * header.band_count *
                                     bytes_per_sample(header.sample_type);
        std::vector<std::uint8_t> raw(chunk_bytes[i]);
        read_at(chunk_offsets[i], raw.size(), raw.data());
        decoded.fetch_add(1, std::memory_order_relaxed);
        if (header.compression == Compression::None) {
            if (raw.size() < expected)
                throw Error(ErrorCode::CorruptData,
                            fmt::format("{}: chunk {} holds {} bytes, expected {}", path.string(),
                                        i, raw.size(), expected));
            raw.resize(expected);
            return raw;
        }
        std::vector<std::uint8_t> out(expected);
        uLongf out_len = static_cast<uLongf>(expected);
        const int rc = ::uncompress(out.data(), &out_len, raw.data(), static_cast<uLong>(raw.size()));
        // Z_BUF_ERROR means the output filled up; trailing bytes past the
        // expected chunk size are ignored.
        if ((rc != Z_OK && rc != Z_BUF_ERROR) || out_len != expected)
            throw Error(ErrorCode::CorruptData,
                        fmt::format("{}: deflate stream of chunk {} failed (zlib {}, {} of {} bytes)",
                                    path.string(), i, rc, out_len, expected));
        return out;
    }
};

Raster Raster::open(const std::filesystem::path& path) {
    const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0)
        throw Error(ErrorCode::IoError, fmt::format("{}: {}", path.string(), std::strerror(errno)));
    auto state = std::make_shared<State>();
    state->path = path;
    state->file = std::make_unique<FileDescriptor>(fd);
    struct stat st {};
    if (::fstat(fd, &st) != 0)
        throw Error(ErrorCode::IoError, fmt::format("{}: {}", path.string(), std::strerror(errno)));
    state->file_size = static_cast<std::uint64_t>(st.st_size);

    std::uint8_t hdr[8] = {};
    if (state->file_size < 8) throw Error(ErrorCode::NotTiff, path.string() + ": too short");
    state->read_at(0, 8, hdr);
    if (hdr[0] == 'M' && hdr[1] == 'M')
        throw Error(ErrorCode::UnsupportedFeature, path.string() + ": big-endian TIFF");
    if (hdr[0] != 'I' || hdr[1] != 'I')
        throw Error(ErrorCode::NotTiff, path.string() + ": bad byte-order mark");
    const auto magic = load<std::uint16_t>(hdr + 2);
    if (magic == 43) throw Error(ErrorCode::UnsupportedFeature, path.string() + ": BigTIFF");
    if (magic != 42) throw Error(ErrorCode::NotTiff, path.string() + ": bad TIFF magic");

    // IFD
    const auto ifd_offset = load<std::uint32_t>(hdr + 4);
    std::uint8_t count_bytes[2];
    state->read_at(ifd_offset, 2, count_bytes);
    const auto n_entries = load<std::uint16_t>(count_bytes);
    std::vector<std::uint8_t> entries(std::size_t{n_entries} * 12);
    state->read_at(ifd_offset + 2, entries.size(), entries.data());

    std::map<std::uint16_t, Field> fields;
    for (std::size_t e = 0; e < n_entries; ++e) {
        const std::uint8_t* p = entries.data() + e * 12;
        Field f;
        const auto tag = load<std::uint16_t>(p);
        f.type = load<std::uint16_t>(p + 2);
        f.count = load<std::uint32_t>(p + 4);
        const std::size_t sz = field_size(f.type);
        if (sz == 0) continue;  // unknown type; skip per TIFF rules
        const std::uint64_t total = std::uint64_t{sz} * f.count;
        if (total > state->file_size)
            throw Error(ErrorCode::CorruptData,
                        fmt::format("{}: tag {} claims {} bytes", path.string(), tag, total));
        f.bytes.resize(total);
        if (total <= 4)
            std::memcpy(f.bytes.data(), p + 8, total);
        else
            state->read_at(load<std::uint32_t>(p + 8), total, f.bytes.data());
        fields.emplace(tag, std::move(f));
    }

    auto get_uints = [&](std::uint16_t tag) -> std::optional<std::vector<std::uint64_t>> {
        auto it = fields.find(tag);
        if (it == fields.end()) return std::nullopt;
        return it->second.as_uints();
    };
    auto get_uint = [&](std::uint16_t tag, std::optional<std::uint64_t> fallback)
        -> std::uint64_t {
        auto v = get_uints(tag);
        if (v && !v->empty()) return v->front();
        if (fallback) return *fallback;
        throw Error(ErrorCode::CorruptData,
                    fmt::format("{}: required tag {} missing", path.string(), tag));
    };

    RasterHeader& h = state->header;
    h.width = static_cast<std::uint32_t>(get_uint(kImageWidth, std::nullopt));
    h.height = static_cast<std::uint32_t>(get_uint(kImageLength, std::nullopt));
    h.band_count = static_cast<std::uint32_t>(get_uint(kSamplesPerPixel, 1));
    if (h.width == 0 || h.height == 0 || h.band_count == 0)
        throw Error(ErrorCode::CorruptData, path.string() + ": zero image dimension");

    const auto bits = get_uints(kBitsPerSample).value_or(std::vector<std::uint64_t>{1});
    const auto formats = get_uints(kSampleFormat).value_or(std::vector<std::uint64_t>{1});
    if (std::adjacent_find(bits.begin(), bits.end(), std::not_equal_to<>()) != bits.end() ||
        std::adjacent_find(formats.begin(), formats.end(), std::not_equal_to<>()) != formats.end())
        throw Error(ErrorCode::UnsupportedFeature, path.string() + ": mixed per-band sample types");
    h.sample_type = sample_type_from(bits.front(), formats.front());

    const auto compression = get_uint(kCompression, 1);
    if (compression == 1)
        h.compression = Compression::None;
    else if (compression == 8 || compression == 32946)
        h.compression = Compression::Deflate;
    else
        throw Error(ErrorCode::UnsupportedFeature,
                    fmt::format("{}: compression {} ({}); transcode to deflate or none",
                                path.string(), compression, compression_name(compression)));
    if (const auto predictor = get_uint(kPredictor, 1); predictor != 1)
        throw Error(ErrorCode::UnsupportedFeature,
                    fmt::format("{}: predictor {} (only 1 is supported)", path.string(), predictor));
    if (get_uint(kPlanarConfig, 1) != 1 && h.band_count > 1)
        throw Error(ErrorCode::UnsupportedFeature,
                    path.string() + ": planar configuration is not chunky (PlanarConfiguration=2)");

    std::size_t n_chunks = 0;
    if (fields.contains(kTileWidth)) {
        h.layout = RasterLayout::tiles(static_cast<std::uint32_t>(get_uint(kTileWidth, std::nullopt)),
                                       static_cast<std::uint32_t>(get_uint(kTileLength, std::nullopt)));
        if (h.layout.tile_w == 0 || h.layout.tile_h == 0 || h.layout.tile_w % 16 != 0 ||
            h.layout.tile_h % 16 != 0)
            throw Error(ErrorCode::UnsupportedFeature,
                        fmt::format("{}: tile size {}x{} is not a multiple of 16", path.string(),
                                    h.layout.tile_w, h.layout.tile_h));
        state->chunks_across = (h.width + h.layout.tile_w - 1) / h.layout.tile_w;
        const std::uint32_t down = (h.height + h.layout.tile_h - 1) / h.layout.tile_h;
        n_chunks = std::size_t{state->chunks_across} * down;
        state->chunk_offsets = get_uints(kTileOffsets).value_or(std::vector<std::uint64_t>{});
        state->chunk_bytes = get_uints(kTileByteCounts).value_or(std::vector<std::uint64_t>{});
    } else {
        const auto rps = get_uint(kRowsPerStrip, std::numeric_limits<std::uint32_t>::max());
        h.layout = RasterLayout::strips(
            static_cast<std::uint32_t>(std::clamp<std::uint64_t>(rps, 1, h.height)));
        n_chunks = (h.height + h.layout.rows_per_strip - 1) / h.layout.rows_per_strip;
        state->chunk_offsets = get_uints(kStripOffsets).value_or(std::vector<std::uint64_t>{});
        state->chunk_bytes = get_uints(kStripByteCounts).value_or(std::vector<std::uint64_t>{});
    }
    if (state->chunk_offsets.size() != n_chunks || state->chunk_bytes.size() != n_chunks)
        throw Error(ErrorCode::CorruptData,
                    fmt::format("{}: expected {} chunks, found {} offsets / {} byte counts",
                                path.string(), n_chunks, state->chunk_offsets.size(),
                                state->chunk_bytes.size()));
    for (std::size_t i = 0; i < n_chunks; ++i) {
        if (state->chunk_offsets[i] + state->chunk_bytes[i] > state->file_size)
            throw Error(ErrorCode::CorruptData,
                        fmt::format("{}: chunk {} extends past end of file", path.string(), i));
    }

    // GeoKeys
    std::map<std::uint16_t, std::uint16_t> geokeys;
    if (auto it = fields.find(kGeoKeyDirectory); it != fields.end()) {
        const auto dir = it->second.as_uints();
        if (dir.size() >= 4) {
            const std::size_t n_keys = dir[3];
            for (std::size_t k = 0; k < n_keys && 4 + 4 * k + 3 < dir.size(); ++k) {
                const auto key = static_cast<std::uint16_t>(dir[4 + 4 * k]);
                const auto location = dir[4 + 4 * k + 1];
                const auto value = dir[4 + 4 * k + 3];
                if (location == 0) {
                    geokeys[key] = static_cast<std::uint16_t>(value);
                } else if (location == kGeoKeyDirectory && value < dir.size()) {
                    geokeys[key] = static_cast<std::uint16_t>(dir[value]);
                }
            }
        }
    }

    // Geotransform
    GeoTransform gt;
    if (auto it = fields.find(kModelTransformation); it != fields.end()) {
        const auto m = it->second.as_doubles();
        if (m.size() < 16)
            throw Error(ErrorCode::CorruptData, path.string() + ": short ModelTransformation");
        if (m[1] != 0 || m[4] != 0)
            throw Error(ErrorCode::UnsupportedFeature,
                        path.string() + ": rotated or sheared geotransform");
        gt = {m[3], m[7], m[0], m[5]};
    } else if (fields.contains(kModelPixelScale) && fields.contains(kModelTiepoint)) {
        const auto scale = fields.at(kModelPixelScale).as_doubles();
        const auto tie = fields.at(kModelTiepoint).as_doubles();
        if (scale.size() < 2 || tie.size() < 6)
            throw Error(ErrorCode::CorruptData, path.string() + ": short georeference tags");
        gt.pixel_w = scale[0];
        gt.pixel_h = -scale[1];
        gt.origin_x = tie[3] - tie[0] * gt.pixel_w;
        gt.origin_y = tie[4] - tie[1] * gt.pixel_h;
    } else {
        throw Error(ErrorCode::MissingGeoreference,
                    path.string() + ": no ModelPixelScale+ModelTiepoint or ModelTransformation");
    }
    if (!(gt.pixel_w > 0) || !(gt.pixel_h < 0))
        throw Error(ErrorCode::UnsupportedFeature,
                    fmt::format("{}: geotransform is not north-up (pixel size {}, {})",
                                path.string(), gt.pixel_w, gt.pixel_h));
    if (auto rt = geokeys.find(kGTRasterTypeGeoKey);
        rt != geokeys.end() && rt->second == kRasterPixelIsPoint) {
        gt.origin_x -= 0.5 * gt.pixel_w;
        gt.origin_y -= 0.5 * gt.pixel_h;
    }
    h.geotransform = gt;

    // CRS
    int epsg = 0;
    const auto model = geokeys.contains(kGTModelTypeGeoKey) ? geokeys.at(kGTModelTypeGeoKey) : 0;
    if ((model == kModelTypeProjected || model == 0) && geokeys.contains(kProjectedCSTypeGeoKey))
        epsg = geokeys.at(kProjectedCSTypeGeoKey);
    else if ((model == kModelTypeGeographic || model == 0) &&
             geokeys.contains(kGeographicTypeGeoKey))
        epsg = geokeys.at(kGeographicTypeGeoKey);
    if (!CrsCode::is_supported(epsg))
        throw Error(ErrorCode::UnsupportedCrs,
                    fmt::format("{}: CRS {} is outside the supported set", path.string(),
                                epsg == 0 ? std::string("(none)") : fmt::format("EPSG:{}", epsg)));
    h.crs = CrsCode::from_epsg(epsg);

    if (auto it = fields.find(kGdalNodata); it != fields.end()) {
        const std::string text = it->second.as_string();
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str()) h.nodata = v;
    }

    return Raster(std::move(state));
}

const RasterHeader& Raster::header() const noexcept {
    return state_->header;
}

const std::filesystem::path& Raster::path() const noexcept {
    return state_->path;
}

std::size_t Raster::chunks_decoded() const noexcept {
    return state_->decoded.load(std::memory_order_relaxed);
}

PixelBlock Raster::read_window(std::int64_t col0, std::int64_t row0, std::size_t w, std::size_t h,
                               double fill) const {
    std::vector<std::size_t> bands(state_->header.band_count);
    std::iota(bands.begin(), bands.end(), std::size_t{0});
    return read_window(col0, row0, w, h, bands, fill);
}

PixelBlock Raster::read_window(std::int64_t col0, std::int64_t row0, std::size_t w, std::size_t h,
                               std::span<const std::size_t> bands, double fill) const {
    const RasterHeader& hdr = state_->header;
    if (w == 0 || h == 0) throw Error(ErrorCode::InvalidArgument, "empty read window");
    if (bands.empty()) throw Error(ErrorCode::InvalidArgument, "no bands requested");
    for (std::size_t b : bands) {
        if (b >= hdr.band_count)
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("band {} out of range (raster has {})", b, hdr.band_count));
    }

    PixelBlock block;
    block.origin_col = col0;
    block.origin_row = row0;
    block.data = Image(bands.size(), h, w, fill);
    block.validity = ValidityPlane(h, w, 0);

    // Window clipped to the raster extent.
    const std::int64_t cx0 = std::max<std::int64_t>(col0, 0);
    const std::int64_t cy0 = std::max<std::int64_t>(row0, 0);
    const std::int64_t cx1 = std::min<std::int64_t>(col0 + static_cast<std::int64_t>(w), hdr.width);
    const std::int64_t cy1 = std::min<std::int64_t>(row0 + static_cast<std::int64_t>(h), hdr.height);
    if (cx0 >= cx1 || cy0 >= cy1) return block;

    const std::size_t bps = bytes_per_sample(hdr.sample_type);
    const std::size_t pixel_bytes = bps * hdr.band_count;
    const std::optional<double> nodata = hdr.nodata;
    const bool nodata_nan = nodata && std::isnan(*nodata);

    std::uint32_t chunk_w = hdr.layout.tiled ? hdr.layout.tile_w : hdr.width;
    std::uint32_t chunk_h = hdr.layout.tiled ? hdr.layout.tile_h : hdr.layout.rows_per_strip;
    const auto tx0 = static_cast<std::uint32_t>(cx0 / chunk_w);
    const auto tx1 = static_cast<std::uint32_t>((cx1 - 1) / chunk_w);
    const auto ty0 = static_cast<std::uint32_t>(cy0 / chunk_h);
    const auto ty1 = static_cast<std::uint32_t>((cy1 - 1) / chunk_h);
    const std::uint32_t across = hdr.layout.tiled ? state_->chunks_across : 1;

    for (std::uint32_t ty = ty0; ty <= ty1; ++ty) {
        for (std::uint32_t tx = tx0; tx <= tx1; ++tx) {
            const std::size_t idx = std::size_t{ty} * across + tx;
            const auto geom = state_->chunk_geom(idx);
            const std::vector<std::uint8_t> buf = state_->decode_chunk(idx);
            const std::int64_t ox0 = std::max<std::int64_t>(cx0, geom.col0);
            const std::int64_t ox1 = std::min<std::int64_t>(cx1, std::int64_t{geom.col0} + geom.w);
            const std::int64_t oy0 = std::max<std::int64_t>(cy0, geom.row0);
            const std::int64_t oy1 = std::min<std::int64_t>(cy1, std::int64_t{geom.row0} + geom.h);
            for (std::int64_t y = oy0; y < oy1; ++y) {
                const std::size_t out_r = static_cast<std::size_t>(y - row0);
                const std::uint8_t* row_ptr =
                    buf.data() + static_cast<std::size_t>(y - geom.row0) * geom.w * pixel_bytes;
                for (std::int64_t x = ox0; x < ox1; ++x) {
                    const std::size_t out_c = static_cast<std::size_t>(x - col0);
                    const std::uint8_t* px =
                        row_ptr + static_cast<std::size_t>(x - geom.col0) * pixel_bytes;
                    bool valid = true;
                    for (std::size_t bi = 0; bi < bands.size(); ++bi) {
                        const double v = decode_sample(hdr.sample_type, px + bands[bi] * bps);
                        if (nodata && (v == *nodata || (nodata_nan && std::isnan(v)))) {
                            valid = false;
                            break;
                        }
                        block.data(bi, out_r, out_c) = v;
                    }
                    if (valid) {
                        block.validity(out_r, out_c) = 1;
                    } else {
                        for (std::size_t bi = 0; bi < bands.size(); ++bi)
                            block.data(bi, out_r, out_c) = fill;
                    }
                }
            }
        }
    }
    return block;
}

// -- writer ---------------------------------------------------------------------

namespace {

struct TagEntry {
    std::uint16_t tag;
    std::uint16_t type;
    std::uint32_t count;
    std::vector<std::uint8_t> bytes;
};

template <typename T>
void append(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

TagEntry shorts(std::uint16_t tag, std::initializer_list<std::uint16_t> values) {
    TagEntry e{tag, kShort, static_cast<std::uint32_t>(values.size()), {}};
    for (auto v : values) append(e.bytes, v);
    return e;
}

TagEntry shorts(std::uint16_t tag, const std::vector<std::uint16_t>& values) {
    TagEntry e{tag, kShort, static_cast<std::uint32_t>(values.size()), {}};
    for (auto v : values) append(e.bytes, v);
    return e;
}

TagEntry longs(std::uint16_t tag, const std::vector<std::uint32_t>& values) {
    TagEntry e{tag, kLong, static_cast<std::uint32_t>(values.size()), {}};
    for (auto v : values) append(e.bytes, v);
    return e;
}

TagEntry doubles(std::uint16_t tag, std::initializer_list<double> values) {
    TagEntry e{tag, kDouble, static_cast<std::uint32_t>(values.size()), {}};
    for (auto v : values) append(e.bytes, v);
    return e;
}

TagEntry ascii(std::uint16_t tag, const std::string& s) {
    TagEntry e{tag, kAscii, static_cast<std::uint32_t>(s.size() + 1), {}};
    e.bytes.assign(s.begin(), s.end());
    e.bytes.push_back(0);
    return e;
}

void encode_sample(SampleType t, double v, std::uint8_t* dst) {
    auto check_int = [&](double lo, double hi) {
        if (!std::isfinite(v) || std::nearbyint(v) != v || v < lo || v > hi)
            throw Error(ErrorCode::InvalidArgument,
                        fmt::format("value {} is not representable as {}", v, to_string(t)));
    };
    switch (t) {
    case SampleType::UInt8:
        check_int(0, 255);
        dst[0] = static_cast<std::uint8_t>(v);
        break;
    case SampleType::UInt16: {
        check_int(0, 65535);
        const auto s = static_cast<std::uint16_t>(v);
        std::memcpy(dst, &s, 2);
        break;
    }
    case SampleType::Int16: {
        check_int(-32768, 32767);
        const auto s = static_cast<std::int16_t>(v);
        std::memcpy(dst, &s, 2);
        break;
    }
    case SampleType::Float32: {
        const auto s = static_cast<float>(v);
        std::memcpy(dst, &s, 4);
        break;
    }
    }
}

std::string format_nodata(SampleType t, double v) {
    if (t != SampleType::Float32 && std::isfinite(v) && std::nearbyint(v) == v)
        return fmt::format("{}", static_cast<std::int64_t>(v));
    return fmt::format("{}", v);
}

std::vector<std::uint8_t> deflate_bytes(const std::vector<std::uint8_t>& in) {
    uLongf out_len = ::compressBound(static_cast<uLong>(in.size()));
    std::vector<std::uint8_t> out(out_len);
    if (::compress2(out.data(), &out_len, in.data(), static_cast<uLong>(in.size()),
                    Z_DEFAULT_COMPRESSION) != Z_OK)
        throw Error(ErrorCode::IoError, "deflate compression failed");
    out.resize(out_len);
    return out;
}

}  // namespace

void write_geotiff(const std::filesystem::path& path, const Image& bands,
                   const GeoTransform& geotransform, CrsCode crs, const WriteOptions& options) {
    if (bands.channels == 0 || bands.height == 0 || bands.width == 0 ||
        bands.data.size() != bands.channels * bands.height * bands.width)
        throw Error(ErrorCode::InvalidArgument,
                    fmt::format("inconsistent raster dimensions {}x{}x{} with {} values",
                                bands.channels, bands.height, bands.width, bands.data.size()));
    if (bands.channels > 65535 || bands.width > std::numeric_limits<std::uint32_t>::max() ||
        bands.height > std::numeric_limits<std::uint32_t>::max())
        throw Error(ErrorCode::InvalidArgument, "raster too large for classic TIFF");
    geotransform.validate();
    RasterLayout layout = options.layout;
    if (!layout.tiled) layout.rows_per_strip = std::min<std::uint32_t>(layout.rows_per_strip, static_cast<std::uint32_t>(bands.height));
    if (layout.tiled && (layout.tile_w == 0 || layout.tile_h == 0 || layout.tile_w % 16 != 0 ||
                         layout.tile_h % 16 != 0))
        throw Error(ErrorCode::InvalidArgument, "tile dimensions must be positive multiples of 16");
    if (!layout.tiled && layout.rows_per_strip == 0)
        throw Error(ErrorCode::InvalidArgument, "rows_per_strip must be positive");

    const auto width = static_cast<std::uint32_t>(bands.width);
    const auto height = static_cast<std::uint32_t>(bands.height);
    const auto spp = static_cast<std::uint16_t>(bands.channels);
    const std::size_t bps = bytes_per_sample(options.sample_type);
    const std::size_t pixel_bytes = bps * spp;

    // Encode chunks.
    std::vector<std::vector<std::uint8_t>> chunks;
    auto encode_region = [&](std::uint32_t col0, std::uint32_t row0, std::uint32_t cw,
                             std::uint32_t ch) {
        std::vector<std::uint8_t> buf(std::size_t{cw} * ch * pixel_bytes, 0);
        for (std::uint32_t r = 0; r < ch && row0 + r < height; ++r) {
            for (std::uint32_t c = 0; c < cw && col0 + c < width; ++c) {
                std::uint8_t* px = buf.data() + (std::size_t{r} * cw + c) * pixel_bytes;
                for (std::uint16_t b = 0; b < spp; ++b)
                    encode_sample(options.sample_type, bands(b, row0 + r, col0 + c), px + b * bps);
            }
        }
        chunks.push_back(options.compression == Compression::Deflate ? deflate_bytes(buf)
                                                                     : std::move(buf));
    };
    if (layout.tiled) {
        for (std::uint32_t ty = 0; ty < height; ty += layout.tile_h)
            for (std::uint32_t tx = 0; tx < width; tx += layout.tile_w)
                encode_region(tx, ty, layout.tile_w, layout.tile_h);
    } else {
        for (std::uint32_t r = 0; r < height; r += layout.rows_per_strip)
            encode_region(0, r, width, std::min(layout.rows_per_strip, height - r));
    }

    // Data follows the 8-byte header; the IFD goes after the data.
    std::vector<std::uint32_t> offsets;
    std::vector<std::uint32_t> counts;
    std::uint64_t cursor = 8;
    for (const auto& c : chunks) {
        offsets.push_back(static_cast<std::uint32_t>(cursor));
        counts.push_back(static_cast<std::uint32_t>(c.size()));
        cursor += c.size();
    }
    if (cursor > std::numeric_limits<std::uint32_t>::max() / 2)
        throw Error(ErrorCode::InvalidArgument, "raster too large for classic TIFF");
    cursor += cursor % 2;
    const std::uint64_t ifd_offset = cursor;

    const std::uint16_t sample_format = options.sample_type == SampleType::Float32 ? 3
                                        : options.sample_type == SampleType::Int16 ? 2
                                                                                   : 1;
    std::vector<TagEntry> tags;
    tags.push_back(longs(kImageWidth, {width}));
    tags.push_back(longs(kImageLength, {height}));
    tags.push_back(shorts(kBitsPerSample, std::vector<std::uint16_t>(spp, static_cast<std::uint16_t>(bps * 8))));
    tags.push_back(shorts(kCompression, {static_cast<std::uint16_t>(
                                            options.compression == Compression::Deflate ? 8 : 1)}));
    tags.push_back(shorts(kPhotometric, {1}));
    tags.push_back(shorts(kSamplesPerPixel, {spp}));
    tags.push_back(shorts(kPlanarConfig, {1}));
    if (layout.tiled) {
        tags.push_back(longs(kTileWidth, {layout.tile_w}));
        tags.push_back(longs(kTileLength, {layout.tile_h}));
        tags.push_back(longs(kTileOffsets, offsets));
        tags.push_back(longs(kTileByteCounts, counts));
    } else {
        tags.push_back(longs(kStripOffsets, offsets));
        tags.push_back(longs(kRowsPerStrip, {layout.rows_per_strip}));
        tags.push_back(longs(kStripByteCounts, counts));
    }
    if (spp > 1) tags.push_back(shorts(kExtraSamples, std::vector<std::uint16_t>(spp - 1, 0)));
    tags.push_back(shorts(kSampleFormat, std::vector<std::uint16_t>(spp, sample_format)));
    tags.push_back(doubles(kModelPixelScale, {geotransform.pixel_w, -geotransform.pixel_h, 0.0}));
    tags.push_back(doubles(kModelTiepoint,
                           {0.0, 0.0, 0.0, geotransform.origin_x, geotransform.origin_y, 0.0}));
    {
        const bool geographic = crs.is_geographic();
        const auto code = static_cast<std::uint16_t>(crs.epsg());
        tags.push_back(shorts(kGeoKeyDirectory,
                              {1, 1, 0, 3,
                               kGTModelTypeGeoKey, 0, 1,
                               geographic ? kModelTypeGeographic : kModelTypeProjected,
                               kGTRasterTypeGeoKey, 0, 1, kRasterPixelIsArea,
                               geographic ? kGeographicTypeGeoKey : kProjectedCSTypeGeoKey, 0, 1,
                               code}));
    }
    if (options.nodata) tags.push_back(ascii(kGdalNodata, format_nodata(options.sample_type, *options.nodata)));
    std::sort(tags.begin(), tags.end(), [](const auto& a, const auto& b) { return a.tag < b.tag; });

    std::vector<std::uint8_t> ifd;
    std::vector<std::uint8_t> extra;
    const std::uint64_t extra_base = ifd_offset + 2 + 12 * tags.size() + 4;
    append(ifd, static_cast<std::uint16_t>(tags.size()));
    for (const auto& t : tags) {
        append(ifd, t.tag);
        append(ifd, t.type);
        append(ifd, t.count);
        if (t.bytes.size() <= 4) {
            std::uint8_t inline_value[4] = {0, 0, 0, 0};
            std::memcpy(inline_value, t.bytes.data(), t.bytes.size());
            ifd.insert(ifd.end(), inline_value, inline_value + 4);
        } else {
            append(ifd, static_cast<std::uint32_t>(extra_base + extra.size()));
            extra.insert(extra.end(), t.bytes.begin(), t.bytes.end());
            if (extra.size() % 2) extra.push_back(0);
        }
    }
    append(ifd, std::uint32_t{0});  // no next IFD

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, fmt::format("{}: cannot open for writing", path.string()));
    const std::uint8_t header[8] = {'I', 'I', 42, 0,
                                    static_cast<std::uint8_t>(ifd_offset & 0xff),
                                    static_cast<std::uint8_t>((ifd_offset >> 8) & 0xff),
                                    static_cast<std::uint8_t>((ifd_offset >> 16) & 0xff),
                                    static_cast<std::uint8_t>((ifd_offset >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(header), 8);
    std::uint64_t written = 8;
    for (const auto& c : chunks) {
        out.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size()));
        written += c.size();
    }
    if (written < ifd_offset) out.put('\0');
    out.write(reinterpret_cast<const char*>(ifd.data()), static_cast<std::streamsize>(ifd.size()));
    out.write(reinterpret_cast<const char*>(extra.data()), static_cast<std::streamsize>(extra.size()));
    if (!out)
        throw Error(ErrorCode::IoError, fmt::format("{}: write failed", path.string()));
}

}  // namespace geochip
