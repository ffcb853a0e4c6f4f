#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace facemimic {

struct ImageDims {
    int width = 96;
    int height = 64;

    int pixels() const { return width * height; }
    friend bool operator==(const ImageDims&, const ImageDims&) = default;
};

/// Planar RGB image (channel-major, then row, then column) with values in [0,1].
/// This is the layout the networks consume, so no transposition is needed.
class SelfImage {
public:
    static constexpr int kChannels = 3;

    SelfImage() = default;
    explicit SelfImage(ImageDims dims, float fill = 0.0f);

    ImageDims dims() const { return dims_; }
    int width() const { return dims_.width; }
    int height() const { return dims_.height; }

    float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    std::span<float> channel(int c) {
        return std::span(data_).subspan(static_cast<std::size_t>(c) * dims_.pixels(), dims_.pixels());
    }
    std::span<const float> channel(int c) const {
        return std::span(data_).subspan(static_cast<std::size_t>(c) * dims_.pixels(), dims_.pixels());
    }

    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    /// Clamps to [0,1] and snaps every value to the nearest of the 256 levels
    /// an 8-bit camera (and PNG file) can represent.
    void quantize_8bit();

    /// Interleaved 8-bit RGB, row-major. Exact inverse of from_rgb8 after quantize_8bit.
    std::vector<std::uint8_t> to_rgb8() const;
    static SelfImage from_rgb8(ImageDims dims, std::span<const std::uint8_t> rgb);

    friend bool operator==(const SelfImage&, const SelfImage&) = default;

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * dims_.height + y) * dims_.width + x;
    }

    ImageDims dims_{0, 0};
    std::vector<float> data_;
};

}  // namespace facemimic
