#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "apkvis/detail/bytes.hpp"

namespace apkvis {

inline std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

/// Lowercase hex SHA-256.
inline std::string sha256_hex(ByteView data)
{
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "SHA-256 computation failed");
    }
    return to_hex(std::span(md.data(), len));
}

inline std::string sha256_hex(std::string_view text)
{
    return sha256_hex(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string sha256_file(const std::filesystem::path& path)
{
    return sha256_hex(ByteView(detail::read_file(path)));
}

} // namespace apkvis
