#pragma once

// Bytes to pixels: sequential row-major fill of a square canvas (zero
// padded), then resampling to one of the fixed output resolutions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apkvis/detail/bytes.hpp"
#include "apkvis/error.hpp"

namespace apkvis {

enum class ColorMode { Grayscale, Rgb };
enum class Resolution : std::uint32_t { R128 = 128, R256 = 256, R512 = 512 };
enum class Resample { NearestNeighbor, Bilinear };

constexpr std::uint32_t channels(ColorMode mode) noexcept { return mode == ColorMode::Rgb ? 3 : 1; }
constexpr std::uint32_t pixels_per_side(Resolution r) noexcept { return static_cast<std::uint32_t>(r); }

constexpr std::string_view to_string(ColorMode m) noexcept
{
    return m == ColorMode::Rgb ? "rgb" : "grayscale";
}

constexpr std::string_view to_string(Resample r) noexcept
{
    return r == Resample::Bilinear ? "bilinear" : "nearest";
}

inline std::optional<ColorMode> parse_color_mode(std::string_view s)
{
    if (s == "grayscale" || s == "gray") return ColorMode::Grayscale;
    if (s == "rgb") return ColorMode::Rgb;
    return std::nullopt;
}

inline std::optional<Resolution> parse_resolution(std::string_view s)
{
    if (s == "128") return Resolution::R128;
    if (s == "256") return Resolution::R256;
    if (s == "512") return Resolution::R512;
    return std::nullopt;
}

inline std::optional<Resample> parse_resample(std::string_view s)
{
    if (s == "nearest") return Resample::NearestNeighbor;
    if (s == "bilinear") return Resample::Bilinear;
    return std::nullopt;
}

struct ImageSpec {
    ColorMode color_mode = ColorMode::Grayscale;
    Resolution resolution = Resolution::R128;
    Resample resample = Resample::NearestNeighbor;

    std::uint32_t side() const noexcept { return pixels_per_side(resolution); }
    std::uint32_t channel_count() const noexcept { return channels(color_mode); }

    /// "<mode>_<res>", the suffix used in image file names.
    std::string tag() const
    {
        return std::string(to_string(color_mode)) + "_" + std::to_string(side());
    }

    friend bool operator==(const ImageSpec&, const ImageSpec&) = default;
};

/// Parses "<mode>_<res>" (e.g. "rgb_256"); resample stays at its default.
inline std::optional<ImageSpec> parse_image_spec(std::string_view tag)
{
    const auto sep = tag.rfind('_');
    if (sep == std::string_view::npos) {
        return std::nullopt;
    }
    auto mode = parse_color_mode(tag.substr(0, sep));
    auto res = parse_resolution(tag.substr(sep + 1));
    if (!mode || !res) {
        return std::nullopt;
    }
    return ImageSpec{*mode, *res, Resample::NearestNeighbor};
}

/// The six-cell matrix: {grayscale, rgb} x {128, 256, 512}.
inline std::array<ImageSpec, 6> all_image_specs(Resample resample = Resample::NearestNeighbor)
{
    std::array<ImageSpec, 6> out{};
    std::size_t i = 0;
    for (auto mode : {ColorMode::Grayscale, ColorMode::Rgb}) {
        for (auto res : {Resolution::R128, Resolution::R256, Resolution::R512}) {
            out[i++] = ImageSpec{mode, res, resample};
        }
    }
    return out;
}

struct Canvas {
    ColorMode color_mode = ColorMode::Grayscale;
    std::uint32_t side = 0;
    std::vector<std::uint8_t> pixels; // side * side * channels, row-major

    std::uint32_t channel_count() const noexcept { return channels(color_mode); }
    std::uint8_t at(std::uint32_t row, std::uint32_t col, std::uint32_t ch = 0) const
    {
        return pixels[(std::size_t{row} * side + col) * channel_count() + ch];
    }
};

struct ByteImage {
    ImageSpec spec;
    std::vector<std::uint8_t> pixels; // side * side * channels, row-major
    std::uint64_t source_len = 0;
    std::uint32_t canvas_side = 0;

    std::uint32_t width() const noexcept { return spec.side(); }
    std::uint32_t height() const noexcept { return spec.side(); }
    std::uint8_t at(std::uint32_t row, std::uint32_t col, std::uint32_t ch = 0) const
    {
        return pixels[(std::size_t{row} * width() + col) * spec.channel_count() + ch];
    }
};

/// Smallest s with s * s >= n.
constexpr std::uint64_t ceil_sqrt(std::uint64_t n) noexcept
{
    if (n == 0) {
        return 0;
    }
    auto s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (s * s < n) ++s;
    while (s > 0 && (s - 1) * (s - 1) >= n) --s;
    return s;
}

inline Canvas encode_canvas(ByteView data, ColorMode mode)
{
    if (data.empty()) {
        throw Error(ErrorCode::EmptyInput, "no bytes to render");
    }
    const std::uint64_t ch = channels(mode);
    const std::uint64_t pixel_count = (data.size() + ch - 1) / ch;
    const std::uint64_t side = ceil_sqrt(pixel_count);
    if (side > 0xffff) {
        throw Error(ErrorCode::InvalidArgument, "input too large for a single canvas");
    }
    Canvas canvas;
    canvas.color_mode = mode;
    canvas.side = static_cast<std::uint32_t>(side);
    canvas.pixels.assign(static_cast<std::size_t>(side * side * ch), 0);
    std::copy(data.begin(), data.end(), canvas.pixels.begin());
    return canvas;
}

/// Inverse of encode_canvas given the original length.
inline Bytes decode_canvas(const Canvas& canvas, std::uint64_t source_len)
{
    if (source_len > canvas.pixels.size()) {
        throw Error(ErrorCode::InvalidArgument, "source length exceeds canvas capacity");
    }
    return Bytes(canvas.pixels.begin(), canvas.pixels.begin() + static_cast<std::ptrdiff_t>(source_len));
}

namespace detail {

inline void resample_nearest(const Canvas& in, std::uint32_t out_side, std::vector<std::uint8_t>& out)
{
    const std::uint32_t ch = in.channel_count();
    const std::uint64_t s = in.side;
    for (std::uint32_t y = 0; y < out_side; ++y) {
        const auto src_row = static_cast<std::uint32_t>(y * s / out_side);
        for (std::uint32_t x = 0; x < out_side; ++x) {
            const auto src_col = static_cast<std::uint32_t>(x * s / out_side);
            for (std::uint32_t c = 0; c < ch; ++c) {
                out[(std::size_t{y} * out_side + x) * ch + c] = in.at(src_row, src_col, c);
            }
        }
    }
}

// Pixel-center aligned, edge clamped, rounded to nearest.
inline void resample_bilinear(const Canvas& in, std::uint32_t out_side, std::vector<std::uint8_t>& out)
{
    const std::uint32_t ch = in.channel_count();
    const double scale = static_cast<double>(in.side) / out_side;
    const double max_src = static_cast<double>(in.side - 1);
    for (std::uint32_t y = 0; y < out_side; ++y) {
        const double fy = std::clamp((y + 0.5) * scale - 0.5, 0.0, max_src);
        const auto y0 = static_cast<std::uint32_t>(fy);
        const std::uint32_t y1 = std::min(y0 + 1, in.side - 1);
        const double wy = fy - y0;
        for (std::uint32_t x = 0; x < out_side; ++x) {
            const double fx = std::clamp((x + 0.5) * scale - 0.5, 0.0, max_src);
            const auto x0 = static_cast<std::uint32_t>(fx);
            const std::uint32_t x1 = std::min(x0 + 1, in.side - 1);
            const double wx = fx - x0;
            for (std::uint32_t c = 0; c < ch; ++c) {
                const double top = in.at(y0, x0, c) * (1 - wx) + in.at(y0, x1, c) * wx;
                const double bottom = in.at(y1, x0, c) * (1 - wx) + in.at(y1, x1, c) * wx;
                const double v = top * (1 - wy) + bottom * wy;
                out[(std::size_t{y} * out_side + x) * ch + c] =
                    static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
}

} // namespace detail

/// Nearest neighbour: pixel (row y, column x) copies canvas pixel
/// (row floor(y * s / R), column floor(x * s / R)).
inline ByteImage resample(const Canvas& canvas, const ImageSpec& spec, std::uint64_t source_len = 0)
{
    if (canvas.side == 0 || canvas.pixels.size() != std::size_t{canvas.side} * canvas.side * canvas.channel_count()) {
        throw Error(ErrorCode::InvalidArgument, "canvas is not a populated square");
    }
    if (canvas.color_mode != spec.color_mode) {
        throw Error(ErrorCode::InvalidArgument, "canvas color mode differs from the image spec");
    }
    ByteImage img;
    img.spec = spec;
    img.source_len = source_len;
    img.canvas_side = canvas.side;
    const std::uint32_t side = spec.side();
    img.pixels.assign(std::size_t{side} * side * spec.channel_count(), 0);
    if (canvas.side == side) {
        img.pixels = canvas.pixels;
    } else if (spec.resample == Resample::Bilinear) {
        detail::resample_bilinear(canvas, side, img.pixels);
    } else {
        detail::resample_nearest(canvas, side, img.pixels);
    }
    return img;
}

inline ByteImage render_bytes(ByteView data, const ImageSpec& spec)
{
    return resample(encode_canvas(data, spec.color_mode), spec, data.size());
}

} // namespace apkvis
