#pragma once

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "stereopose/errors.hpp"
#include "stereopose/image.hpp"

namespace stereopose {

namespace detail {

struct FileHandle {
    std::FILE* fp = nullptr;
    explicit FileHandle(const std::filesystem::path& p, const char* mode)
        : fp(std::fopen(p.string().c_str(), mode)) {}
    ~FileHandle() {
        if (fp) std::fclose(fp);
    }
    FileHandle(const FileHandle&) = delete;
    FileHandle& operator=(const FileHandle&) = delete;
};

}  // namespace detail

// Writes go to "<path>.tmp" and are renamed into place so an interrupted
// run never leaves a torn file at the final path.
template <typename WriteFn>
void atomic_file_write(const std::filesystem::path& path, WriteFn&& fn) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    fn(tmp);
    fs::rename(tmp, path);
}

inline void write_png_rgb8(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 3) throw InvalidInputError("write_png_rgb8: expected 3 channels");
    atomic_file_write(path, [&](const std::filesystem::path& tmp) {
        detail::FileHandle fh(tmp, "wb");
        if (!fh.fp) throw ParseError("write_png_rgb8: cannot open " + tmp.string());
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png_create_info_struct(png);
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw ParseError("write_png_rgb8: libpng failure on " + tmp.string());
        }
        png_init_io(png, fh.fp);
        png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < img.height; ++y)
            png_write_row(png, const_cast<png_bytep>(&img.data[static_cast<size_t>(y) * img.width * 3]));
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    });
}

inline void write_png_gray16(const std::filesystem::path& path, const ImageU16& img) {
    if (img.channels != 1) throw InvalidInputError("write_png_gray16: expected 1 channel");
    atomic_file_write(path, [&](const std::filesystem::path& tmp) {
        detail::FileHandle fh(tmp, "wb");
        if (!fh.fp) throw ParseError("write_png_gray16: cannot open " + tmp.string());
        png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
        png_infop info = png_create_info_struct(png);
        if (setjmp(png_jmpbuf(png))) {
            png_destroy_write_struct(&png, &info);
            throw ParseError("write_png_gray16: libpng failure on " + tmp.string());
        }
        png_init_io(png, fh.fp);
        png_set_IHDR(png, info, img.width, img.height, 16, PNG_COLOR_TYPE_GRAY,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_set_swap(png);  // in-memory little endian
        for (int y = 0; y < img.height; ++y)
            png_write_row(png, reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(
                                   &img.data[static_cast<size_t>(y) * img.width])));
        png_write_end(png, nullptr);
        png_destroy_write_struct(&png, &info);
    });
}

inline ImageU8 read_png_rgb8(const std::filesystem::path& path) {
    detail::FileHandle fh(path, "rb");
    if (!fh.fp) throw ParseError("read_png_rgb8: cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("read_png_rgb8: malformed PNG " + path.string());
    }
    png_init_io(png, fh.fp);
    png_read_info(png, info);
    png_set_expand(png);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    ImageU8 img(static_cast<int>(png_get_image_width(png, info)),
                static_cast<int>(png_get_image_height(png, info)), 3);
    for (int y = 0; y < img.height; ++y)
        png_read_row(png, &img.data[static_cast<size_t>(y) * img.width * 3], nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline ImageU16 read_png_gray16(const std::filesystem::path& path) {
    detail::FileHandle fh(path, "rb");
    if (!fh.fp) throw ParseError("read_png_gray16: cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("read_png_gray16: malformed PNG " + path.string());
    }
    png_init_io(png, fh.fp);
    png_read_info(png, info);
    if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(png, info) != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("read_png_gray16: " + path.string() + " is not 16-bit grayscale");
    }
    png_set_swap(png);
    png_read_update_info(png, info);
    ImageU16 img(static_cast<int>(png_get_image_width(png, info)),
                 static_cast<int>(png_get_image_height(png, info)), 1);
    for (int y = 0; y < img.height; ++y)
        png_read_row(png, reinterpret_cast<png_bytep>(&img.data[static_cast<size_t>(y) * img.width]),
                     nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace stereopose
