#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "apkvis/error.hpp"

namespace apkvis {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

namespace detail {

inline std::uint16_t load_u16(ByteView data, std::size_t off) noexcept
{
    return static_cast<std::uint16_t>(data[off] | (data[off + 1] << 8));
}

inline std::uint32_t load_u32(ByteView data, std::size_t off) noexcept
{
    return static_cast<std::uint32_t>(data[off]) | (static_cast<std::uint32_t>(data[off + 1]) << 8) |
           (static_cast<std::uint32_t>(data[off + 2]) << 16) |
           (static_cast<std::uint32_t>(data[off + 3]) << 24);
}

inline std::uint64_t load_u64(ByteView data, std::size_t off) noexcept
{
    return static_cast<std::uint64_t>(load_u32(data, off)) |
           (static_cast<std::uint64_t>(load_u32(data, off + 4)) << 32);
}

/// True when [off, off + len) lies inside a buffer of `size` bytes.
constexpr bool in_bounds(std::uint64_t off, std::uint64_t len, std::uint64_t size) noexcept
{
    return off <= size && len <= size - off;
}

inline Bytes read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto end = in.tellg();
    if (end < 0) {
        throw Error(ErrorCode::IoError, "cannot size " + path.string());
    }
    in.seekg(0, std::ios::beg);
    Bytes out(static_cast<std::size_t>(end));
    if (!out.empty() && !in.read(reinterpret_cast<char*>(out.data()), end)) {
        throw Error(ErrorCode::IoError, "short read on " + path.string());
    }
    return out;
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    const Bytes raw = read_file(path);
    return {raw.begin(), raw.end()};
}

inline void write_file(const std::filesystem::path& path, ByteView data)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cannot create " + path.string());
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw Error(ErrorCode::IoError, "write failed on " + path.string());
    }
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text)
{
    write_file(path, ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace detail
} // namespace apkvis
