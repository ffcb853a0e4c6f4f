#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "facemimic/image.hpp"

namespace facemimic {

/// 8-bit RGB PNG, interleaved row-major pixels.
void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> rgb);

struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;
};

Rgb8Image read_png_rgb8(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const SelfImage& image);
SelfImage read_png(const std::filesystem::path& path);

}  // namespace facemimic
