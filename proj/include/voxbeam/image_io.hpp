// Copyright 2026 The voxbeam Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VOXBEAM_IMAGE_IO_HPP
#define VOXBEAM_IMAGE_IO_HPP

#include <png.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "image.hpp"

namespace voxbeam {

namespace fs = std::filesystem;

inline std::vector<uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const fs::path& path, std::span<const uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// PFM: "PF\n<w> <h>\n-1.0\n" then little-endian float32 RGB, rows bottom-to-top.
// ---------------------------------------------------------------------------

inline std::vector<uint8_t> encode_pfm(const ImageRgb& img) {
    std::string header = "PF\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n-1.0\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + img.size() * 12);
    auto put = [&](float f) {
        auto bits = std::bit_cast<uint32_t>(f);
        for (int i = 0; i < 4; ++i) out.push_back(uint8_t(bits >> (8 * i)));
    };
    for (int y = img.height - 1; y >= 0; --y) {
        for (int x = 0; x < img.width; ++x) {
            const Rgb& c = img(x, y);
            put(c.x);
            put(c.y);
            put(c.z);
        }
    }
    return out;
}

inline void write_pfm(const fs::path& path, const ImageRgb& img) { write_file_bytes(path, encode_pfm(img)); }

/// Accepts colour ("PF") and greyscale ("Pf") files of either byte order.
inline ImageRgb decode_pfm(std::span<const uint8_t> bytes) {
    size_t pos = 0;
    auto token = [&] {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        std::string t;
        while (pos < bytes.size() && !std::isspace(bytes[pos])) t.push_back(char(bytes[pos++]));
        return t;
    };
    std::string magic = token();
    if (magic != "PF" && magic != "Pf") throw Error("pfm: bad magic '" + magic + "'");
    int channels = magic == "PF" ? 3 : 1;
    int w = 0, h = 0;
    double scale = 0;
    try {
        w = std::stoi(token());
        h = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw Error("pfm: malformed header");
    }
    ++pos;  // single whitespace before raster
    if (w <= 0 || h <= 0 || scale == 0) throw Error("pfm: invalid header values");
    size_t need = size_t(w) * size_t(h) * size_t(channels) * 4;
    if (bytes.size() < pos + need) {
        throw Error("pfm: truncated raster, expected " + std::to_string(need) + " bytes, got " +
                    std::to_string(bytes.size() - std::min(bytes.size(), pos)));
    }
    bool little = scale < 0;
    auto get = [&](size_t at) {
        uint32_t bits = 0;
        for (int i = 0; i < 4; ++i) {
            uint32_t b = bytes[at + size_t(little ? i : 3 - i)];
            bits |= b << (8 * i);
        }
        return std::bit_cast<float>(bits);
    };
    ImageRgb img(w, h);
    size_t at = pos;
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            if (channels == 3) {
                img(x, y) = {get(at), get(at + 4), get(at + 8)};
                at += 12;
            } else {
                img(x, y) = Rgb(get(at));
                at += 4;
            }
        }
    }
    return img;
}

inline ImageRgb read_pfm(const fs::path& path) {
    try {
        return decode_pfm(read_file_bytes(path));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// PNG (8-bit RGB) via libpng.
// ---------------------------------------------------------------------------

namespace detail {

struct PngReadState {
    std::span<const uint8_t> bytes;
    size_t pos = 0;
};

inline void png_read_mem(png_structp png, png_bytep out, png_size_t n) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + n > st->bytes.size()) png_error(png, "unexpected end of data");
    std::memcpy(out, st->bytes.data() + st->pos, n);
    st->pos += n;
}

inline void png_write_mem(png_structp png, png_bytep data, png_size_t n) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + n);
}

inline void png_flush_mem(png_structp) {}

[[noreturn]] inline void png_fail(png_structp, png_const_charp msg) { throw Error(std::string("png: ") + msg); }
inline void png_warn(png_structp, png_const_charp) {}

}  // namespace detail

/// Packed 8-bit RGB, row-major, top row first.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> bytes;
    friend bool operator==(const Rgb8Image&, const Rgb8Image&) = default;
};

inline std::vector<uint8_t> encode_png(const Rgb8Image& img) {
    std::vector<uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_fail, detail::png_warn);
    if (!png) throw Error("png: cannot create writer");
    png_infop info = png_create_info_struct(png);
    try {
        png_set_write_fn(png, &out, detail::png_write_mem, detail::png_flush_mem);
        png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < img.height; ++y) {
            png_write_row(png, const_cast<png_bytep>(img.bytes.data() + size_t(y) * size_t(img.width) * 3));
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

/// Decodes any PNG colour type to 8-bit RGB (alpha dropped, 16-bit stripped).
inline Rgb8Image decode_png(std::span<const uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw Error("png: bad signature");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_fail, detail::png_warn);
    if (!png) throw Error("png: cannot create reader");
    png_infop info = png_create_info_struct(png);
    detail::PngReadState state{bytes, 0};
    Rgb8Image img;
    try {
        png_set_read_fn(png, &state, detail::png_read_mem);
        png_read_info(png, info);
        png_set_strip_16(png);
        png_set_strip_alpha(png);
        png_set_palette_to_rgb(png);
        png_set_expand_gray_1_2_4_to_8(png);
        png_set_gray_to_rgb(png);
        png_read_update_info(png, info);
        img.width = int(png_get_image_width(png, info));
        img.height = int(png_get_image_height(png, info));
        if (png_get_rowbytes(png, info) != size_t(img.width) * 3) throw Error("png: unsupported layout");
        img.bytes.resize(size_t(img.width) * size_t(img.height) * 3);
        std::vector<png_bytep> rows(size_t(img.height));
        for (int y = 0; y < img.height; ++y) rows[size_t(y)] = img.bytes.data() + size_t(y) * size_t(img.width) * 3;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);  // a stream cut inside IEND is still an error
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline ImageRgb rgb8_to_float(const Rgb8Image& src) {
    ImageRgb img(src.width, src.height);
    for (size_t i = 0; i < img.size(); ++i) {
        img.pixels[i] = {src.bytes[3 * i] / 255.0f, src.bytes[3 * i + 1] / 255.0f, src.bytes[3 * i + 2] / 255.0f};
    }
    return img;
}

inline uint8_t quantize_unit(float v) { return uint8_t(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

/// Quantizes values already in [0, 1] (display-referred) to 8 bits.
inline Rgb8Image float_to_rgb8(const ImageRgb& img) {
    Rgb8Image out{img.width, img.height, std::vector<uint8_t>(img.size() * 3)};
    for (size_t i = 0; i < img.size(); ++i) {
        out.bytes[3 * i] = quantize_unit(img.pixels[i].x);
        out.bytes[3 * i + 1] = quantize_unit(img.pixels[i].y);
        out.bytes[3 * i + 2] = quantize_unit(img.pixels[i].z);
    }
    return out;
}

/// Reinhard c / (1 + c) per channel followed by a 1/2.2 display gamma.
inline Rgb8Image tonemap(const ImageRgb& linear) {
    ImageRgb display(linear.width, linear.height);
    for (size_t i = 0; i < linear.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
            float v = std::max(linear.pixels[i][c], 0.0f);
            display.pixels[i][c] = std::pow(v / (1.0f + v), 1.0f / 2.2f);
        }
    }
    return float_to_rgb8(display);
}

inline ImageRgb read_png(const fs::path& path) {
    try {
        return rgb8_to_float(decode_png(read_file_bytes(path)));
    } catch (const Error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

inline void write_png(const fs::path& path, const Rgb8Image& img) { write_file_bytes(path, encode_png(img)); }

/// Writes an image whose values are already display-referred in [0, 1].
inline void write_png(const fs::path& path, const ImageRgb& img) { write_png(path, float_to_rgb8(img)); }

}  // namespace voxbeam

#endif
