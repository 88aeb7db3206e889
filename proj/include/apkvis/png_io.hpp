#pragma once

#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "apkvis/byte_image.hpp"
#include "apkvis/detail/bytes.hpp"
#include "apkvis/error.hpp"

namespace apkvis {

struct DecodedPng {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0; // 1 or 3
    std::vector<std::uint8_t> pixels;
};

namespace detail {

struct PngMemoryWriter {
    Bytes out;
    static void write(png_structp png, png_bytep data, png_size_t len)
    {
        auto* self = static_cast<PngMemoryWriter*>(png_get_io_ptr(png));
        self->out.insert(self->out.end(), data, data + len);
    }
    static void flush(png_structp) {}
};

struct PngMemoryReader {
    ByteView in;
    std::size_t pos = 0;
    static void read(png_structp png, png_bytep data, png_size_t len)
    {
        auto* self = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
        if (self->pos + len > self->in.size()) {
            png_error(png, "read past end of PNG data");
        }
        std::memcpy(data, self->in.data() + self->pos, len);
        self->pos += len;
    }
};

} // namespace detail

/// 8-bit grayscale or truecolor PNG. Filter, compression level and chunk
/// set are fixed and no timestamp is written, so equal pixels give equal
/// files.
inline Bytes encode_png(std::uint32_t width, std::uint32_t height, std::uint32_t channel_count,
                        std::span<const std::uint8_t> pixels)
{
    if ((channel_count != 1 && channel_count != 3) ||
        pixels.size() != std::size_t{width} * height * channel_count) {
        throw Error(ErrorCode::InvalidArgument, "pixel buffer does not match PNG geometry");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw Error(ErrorCode::IoError, "png_create_write_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    detail::PngMemoryWriter sink;
    std::vector<png_const_bytep> rows(height);
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorCode::IoError, "PNG encoding failed");
    }
    png_set_write_fn(png, &sink, &detail::PngMemoryWriter::write, &detail::PngMemoryWriter::flush);
    png_set_IHDR(png, info, width, height, 8, channel_count == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_NONE);
    png_set_compression_level(png, 6);
    png_set_compression_strategy(png, 0);
    png_set_compression_mem_level(png, 8);
    png_set_compression_window_bits(png, 15);
    for (std::uint32_t r = 0; r < height; ++r) {
        rows[r] = pixels.data() + std::size_t{r} * width * channel_count;
    }
    png_write_info(png, info);
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return std::move(sink.out);
}

inline Bytes encode_png(const ByteImage& image)
{
    return encode_png(image.width(), image.height(), image.spec.channel_count(), image.pixels);
}

inline void write_png(const std::filesystem::path& path, const ByteImage& image)
{
    const Bytes png = encode_png(image);
    detail::write_file(path, png);
}

/// Decodes 8-bit gray or RGB PNGs; other layouts are converted (alpha
/// stripped, palettes expanded, 16-bit reduced).
inline DecodedPng decode_png(ByteView data)
{
    if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) {
        throw Error(ErrorCode::InvalidImage, "not a PNG");
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) {
        throw Error(ErrorCode::IoError, "png_create_read_struct failed");
    }
    png_infop info = png_create_info_struct(png);
    detail::PngMemoryReader src{data, 0};
    DecodedPng out;
    std::vector<png_bytep> rows;
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::InvalidImage, "corrupt PNG");
    }
    png_set_read_fn(png, &src, &detail::PngMemoryReader::read);
    png_read_info(png, info);
    const auto color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.channels = png_get_channels(png, info);
    if (out.width == 0 || out.height == 0 || out.width > 16384 || out.height > 16384) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorCode::InvalidImage, "unsupported PNG dimensions");
    }
    out.pixels.resize(std::size_t{out.width} * out.height * out.channels);
    rows.resize(out.height);
    for (std::uint32_t r = 0; r < out.height; ++r) {
        rows[r] = out.pixels.data() + std::size_t{r} * out.width * out.channels;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

inline DecodedPng read_png(const std::filesystem::path& path)
{
    return decode_png(ByteView(detail::read_file(path)));
}

/// Loads a PNG written by write_png back into a ByteImage with `spec`.
inline ByteImage load_byte_image(const std::filesystem::path& path, const ImageSpec& spec)
{
    DecodedPng png = read_png(path);
    if (png.width != spec.side() || png.height != spec.side() || png.channels != spec.channel_count()) {
        throw Error(ErrorCode::InvalidImage, path.string() + " does not match " + spec.tag());
    }
    ByteImage img;
    img.spec = spec;
    img.pixels = std::move(png.pixels);
    return img;
}

} // namespace apkvis
