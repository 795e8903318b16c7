#pragma once

#include <cstdint>
#include <vector>

#include "stereopose/errors.hpp"

namespace stereopose {

// Dense row-major H x W x C raster.
template <typename T>
struct Image {
    using value_type = T;

    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c = 1, T fill = T{})
        : width(w), height(h), channels(c), data(static_cast<size_t>(w) * h * c, fill) {}

    bool empty() const { return data.empty(); }
    size_t size() const { return data.size(); }

    T& at(int x, int y, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    const T& at(int x, int y, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }

    bool operator==(const Image& o) const { return same_shape(o) && data == o.data; }
};

using ImageU8 = Image<std::uint8_t>;
using ImageU16 = Image<std::uint16_t>;
using ImageF64 = Image<double>;

// ITU-R 601 luma.
inline ImageF64 to_gray(const ImageU8& rgb) {
    if (rgb.channels != 3 && rgb.channels != 1)
        throw InvalidInputError("to_gray: expected 1 or 3 channels");
    ImageF64 out(rgb.width, rgb.height, 1);
    for (int y = 0; y < rgb.height; ++y)
        for (int x = 0; x < rgb.width; ++x) {
            if (rgb.channels == 1) {
                out.at(x, y) = rgb.at(x, y);
            } else {
                out.at(x, y) = 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) +
                               0.114 * rgb.at(x, y, 2);
            }
        }
    return out;
}

}  // namespace stereopose
