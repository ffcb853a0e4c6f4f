#include "facemimic/image.hpp"

#include "facemimic/errors.hpp"

#include <algorithm>
#include <cmath>

namespace facemimic {

namespace {

std::uint8_t to_byte(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

SelfImage::SelfImage(ImageDims dims, float fill)
    : dims_(dims), data_(static_cast<std::size_t>(kChannels) * dims.pixels(), fill) {
    if (dims.width <= 0 || dims.height <= 0) {
        throw DimensionError("image dimensions must be positive");
    }
}

void SelfImage::quantize_8bit() {
    for (float& v : data_) v = static_cast<float>(to_byte(v)) / 255.0f;
}

std::vector<std::uint8_t> SelfImage::to_rgb8() const {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(dims_.pixels()) * kChannels);
    for (int y = 0; y < dims_.height; ++y) {
        for (int x = 0; x < dims_.width; ++x) {
            for (int c = 0; c < kChannels; ++c) {
                out[(static_cast<std::size_t>(y) * dims_.width + x) * kChannels + c] = to_byte(at(c, y, x));
            }
        }
    }
    return out;
}

SelfImage SelfImage::from_rgb8(ImageDims dims, std::span<const std::uint8_t> rgb) {
    if (rgb.size() != static_cast<std::size_t>(dims.pixels()) * kChannels) {
        throw DimensionError("rgb buffer size does not match image dimensions");
    }
    SelfImage img(dims);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            for (int c = 0; c < kChannels; ++c) {
                img.at(c, y, x) = static_cast<float>(rgb[(static_cast<std::size_t>(y) * dims.width + x) * kChannels + c]) / 255.0f;
            }
        }
    }
    return img;
}

}  // namespace facemimic
