#pragma once

#include <zlib.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stereopose/errors.hpp"
#include "stereopose/png_io.hpp"
#include "stereopose/rasterizer.hpp"

// Self-describing compressed container for dense feature maps (.spkf):
//   magic "SPKF" | u32 version | u32 channel_count
//   channel table: tag[8] | u8 dtype | pad[3] | u32 H,W,C | u64 raw,comp | u32 raw_crc
//   u32 header_crc (over magic..table)
//   deflate payloads in table order
// All integers little-endian.

namespace stereopose {

namespace detail {

constexpr std::uint32_t kSpkfVersion = 1;
constexpr char kSpkfMagic[4] = {'S', 'P', 'K', 'F'};

enum class Dtype : std::uint8_t { U8 = 1, U16 = 2, F64 = 3 };

inline size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::U8: return 1;
        case Dtype::U16: return 2;
        case Dtype::F64: return 8;
    }
    throw VersionError("spkf: unknown dtype code");
}

struct ByteWriter {
    std::vector<std::uint8_t> bytes;
    void raw(const void* p, size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    size_t pos = 0;
    void need(size_t n) const {
        if (pos + n > bytes.size()) throw CorruptionError("spkf: truncated file");
    }
    void raw(void* p, size_t n) {
        need(n);
        std::memcpy(p, bytes.data() + pos, n);
        pos += n;
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos++]) << (8 * i);
        return v;
    }
};

struct ChannelBlob {
    std::string tag;
    Dtype dtype;
    std::uint32_t height, width, channels;
    const std::uint8_t* raw_data;
    std::uint64_t raw_size;
};

template <typename T>
ChannelBlob blob_of(const char* tag, const Image<T>& img, Dtype dtype) {
    return {tag,
            dtype,
            static_cast<std::uint32_t>(img.height),
            static_cast<std::uint32_t>(img.width),
            static_cast<std::uint32_t>(img.channels),
            reinterpret_cast<const std::uint8_t*>(img.data.data()),
            img.data.size() * sizeof(T)};
}

}  // namespace detail

inline void write_features(const DenseFeatureMaps& maps, const std::filesystem::path& path) {
    using namespace detail;
    std::vector<ChannelBlob> blobs;
    auto add = [&](const ChannelBlob& b) {
        if (b.raw_size > 0) blobs.push_back(b);
    };
    add(blob_of("mask", maps.mask, Dtype::U8));
    add(blob_of("depth", maps.depth, Dtype::F64));
    add(blob_of("xyz", maps.xyz, Dtype::F64));
    add(blob_of("region", maps.region, Dtype::U16));
    add(blob_of("objidx", maps.obj_index, Dtype::U16));
    add(blob_of("selfocc", maps.selfocc, Dtype::F64));
    add(blob_of("soflags", maps.selfocc_valid, Dtype::U8));
    add(blob_of("disp", maps.disparity, Dtype::F64));
    add(blob_of("dispok", maps.disparity_valid, Dtype::U8));

    std::vector<std::vector<std::uint8_t>> payloads;
    payloads.reserve(blobs.size());
    for (const auto& b : blobs) {
        uLongf bound = compressBound(static_cast<uLong>(b.raw_size));
        std::vector<std::uint8_t> comp(bound);
        if (compress2(comp.data(), &bound, b.raw_data, static_cast<uLong>(b.raw_size), 6) != Z_OK)
            throw Error("spkf: deflate failed for channel " + b.tag);
        comp.resize(bound);
        payloads.push_back(std::move(comp));
    }

    ByteWriter w;
    w.raw(kSpkfMagic, 4);
    w.u32(kSpkfVersion);
    w.u32(static_cast<std::uint32_t>(blobs.size()));
    for (size_t i = 0; i < blobs.size(); ++i) {
        const auto& b = blobs[i];
        char tag[8] = {};
        std::memcpy(tag, b.tag.data(), std::min<size_t>(b.tag.size(), 8));
        w.raw(tag, 8);
        w.u8(static_cast<std::uint8_t>(b.dtype));
        w.u8(0);
        w.u8(0);
        w.u8(0);
        w.u32(b.height);
        w.u32(b.width);
        w.u32(b.channels);
        w.u64(b.raw_size);
        w.u64(payloads[i].size());
        w.u32(static_cast<std::uint32_t>(crc32(0, b.raw_data, static_cast<uInt>(b.raw_size))));
    }
    w.u32(static_cast<std::uint32_t>(crc32(0, w.bytes.data(), static_cast<uInt>(w.bytes.size()))));
    for (const auto& p : payloads) w.raw(p.data(), p.size());

    atomic_file_write(path, [&](const std::filesystem::path& tmp) {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw ParseError("spkf: cannot open " + tmp.string());
        out.write(reinterpret_cast<const char*>(w.bytes.data()),
                  static_cast<std::streamsize>(w.bytes.size()));
        if (!out) throw ParseError("spkf: write failed on " + tmp.string());
    });
}

inline DenseFeatureMaps read_features(const std::filesystem::path& path) {
    using namespace detail;
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw ParseError("spkf: cannot open " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<size_t>(in.tellg()));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw CorruptionError("spkf: short read on " + path.string());

    ByteReader r{bytes};
    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kSpkfMagic, 4) != 0)
        throw CorruptionError("spkf: bad magic in " + path.string());
    std::uint32_t version = r.u32();
    if (version != kSpkfVersion)
        throw VersionError("spkf: unsupported version " + std::to_string(version));
    std::uint32_t count = r.u32();
    if (count > 64) throw CorruptionError("spkf: implausible channel count");

    struct Entry {
        std::string tag;
        Dtype dtype;
        std::uint32_t h, w, c;
        std::uint64_t raw_size, comp_size;
        std::uint32_t raw_crc;
    };
    std::vector<Entry> entries(count);
    for (auto& e : entries) {
        char tag[9] = {};
        r.raw(tag, 8);
        e.tag = tag;
        std::uint8_t d = r.u8();
        r.u8();
        r.u8();
        r.u8();
        if (d < 1 || d > 3) throw VersionError("spkf: unknown dtype code " + std::to_string(d));
        e.dtype = static_cast<Dtype>(d);
        e.h = r.u32();
        e.w = r.u32();
        e.c = r.u32();
        e.raw_size = r.u64();
        e.comp_size = r.u64();
        e.raw_crc = r.u32();
        if (e.raw_size != static_cast<std::uint64_t>(e.h) * e.w * e.c * dtype_size(e.dtype))
            throw CorruptionError("spkf: size/dims mismatch in channel " + e.tag);
    }
    std::uint32_t header_crc_stored = r.u32();
    std::uint32_t header_crc =
        static_cast<std::uint32_t>(crc32(0, bytes.data(), static_cast<uInt>(r.pos - 4)));
    if (header_crc != header_crc_stored)
        throw CorruptionError("spkf: header checksum mismatch in " + path.string());

    DenseFeatureMaps maps;
    for (const auto& e : entries) {
        r.need(e.comp_size);
        std::vector<std::uint8_t> raw(e.raw_size);
        uLongf raw_len = static_cast<uLongf>(e.raw_size);
        int rc = uncompress(raw.data(), &raw_len, bytes.data() + r.pos,
                            static_cast<uLong>(e.comp_size));
        r.pos += e.comp_size;
        if (rc != Z_OK || raw_len != e.raw_size)
            throw CorruptionError("spkf: inflate failed for channel " + e.tag);
        if (static_cast<std::uint32_t>(crc32(0, raw.data(), static_cast<uInt>(raw.size()))) !=
            e.raw_crc)
            throw CorruptionError("spkf: payload checksum mismatch for channel " + e.tag);

        auto fill = [&](auto& img, Dtype expected) {
            using T = typename std::decay_t<decltype(img)>::value_type;
            if (e.dtype != expected)
                throw VersionError("spkf: channel " + e.tag + " has unexpected dtype");
            img.width = static_cast<int>(e.w);
            img.height = static_cast<int>(e.h);
            img.channels = static_cast<int>(e.c);
            img.data.resize(e.raw_size / sizeof(T));
            std::memcpy(img.data.data(), raw.data(), raw.size());
        };
        if (e.tag == "mask") fill(maps.mask, Dtype::U8);
        else if (e.tag == "depth") fill(maps.depth, Dtype::F64);
        else if (e.tag == "xyz") fill(maps.xyz, Dtype::F64);
        else if (e.tag == "region") fill(maps.region, Dtype::U16);
        else if (e.tag == "objidx") fill(maps.obj_index, Dtype::U16);
        else if (e.tag == "selfocc") fill(maps.selfocc, Dtype::F64);
        else if (e.tag == "soflags") fill(maps.selfocc_valid, Dtype::U8);
        else if (e.tag == "disp") fill(maps.disparity, Dtype::F64);
        else if (e.tag == "dispok") fill(maps.disparity_valid, Dtype::U8);
        else throw VersionError("spkf: unknown channel tag '" + e.tag + "'");
    }
    return maps;
}

}  // namespace stereopose

