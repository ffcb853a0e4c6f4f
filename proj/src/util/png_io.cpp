#include "facemimic/util/png_io.hpp"

#include "facemimic/errors.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace facemimic {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open " + path.string());
    return f;
}

}  // namespace

void write_png_rgb8(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3) {
        throw DimensionError("png: pixel buffer does not match " + std::to_string(width) + "x" +
                             std::to_string(height));
    }
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: cannot allocate writer");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("png: write failed for " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * width * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Rgb8Image read_png_rgb8(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("png: cannot allocate reader");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IntegrityError("png: corrupt image " + path.string());
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const auto color = png_get_color_type(png, info);
    const auto depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_RGB || depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IntegrityError("png: expected 8-bit RGB in " + path.string());
    }
    Rgb8Image out;
    out.width = static_cast<int>(width);
    out.height = static_cast<int>(height);
    out.rgb.resize(static_cast<std::size_t>(width) * height * 3);
    for (png_uint_32 y = 0; y < height; ++y) {
        png_read_row(png, out.rgb.data() + static_cast<std::size_t>(y) * width * 3, nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_png(const std::filesystem::path& path, const SelfImage& image) {
    const auto rgb = image.to_rgb8();
    write_png_rgb8(path, image.width(), image.height(), rgb);
}

SelfImage read_png(const std::filesystem::path& path) {
    const Rgb8Image raw = read_png_rgb8(path);
    return SelfImage::from_rgb8({raw.width, raw.height}, raw.rgb);
}

}  // namespace facemimic
