#pragma once

// Read-only ZIP view of an APK. The file is loaded once into an immutable
// buffer; entry payloads are located and inflated only on demand.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "apkvis/detail/bytes.hpp"
#include "apkvis/error.hpp"

namespace apkvis {

enum class CodeSource { DexOnly, WholeFile };

struct ApkEntry {
    std::string name;
    std::uint16_t method = 0;
    std::uint16_t flags = 0;
    std::uint64_t compressed_size = 0;
    std::uint64_t uncompressed_size = 0;
    std::uint32_t crc32 = 0;
    std::uint64_t local_header_offset = 0;
};

class ApkArchive {
public:
    ApkArchive() = default;

    const std::filesystem::path& source_path() const noexcept { return source_path_; }
    const std::vector<ApkEntry>& entries() const noexcept { return entries_; }
    /// On-disk size of the archive.
    std::uint64_t total_size() const noexcept { return raw_ ? raw_->size() : 0; }
    /// Sum of declared uncompressed entry sizes.
    std::uint64_t uncompressed_total() const noexcept
    {
        std::uint64_t sum = 0;
        for (const auto& e : entries_) {
            sum += e.uncompressed_size;
        }
        return sum;
    }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    const ApkEntry* find(std::string_view name) const noexcept
    {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? nullptr : &entries_[it->second];
    }
    bool contains(std::string_view name) const noexcept { return find(name) != nullptr; }

    /// The archive exactly as it was read from disk.
    ByteView raw_bytes() const noexcept { return raw_ ? ByteView(*raw_) : ByteView{}; }

private:
    friend ApkArchive open_apk_bytes(Bytes bytes, std::filesystem::path source);

    std::filesystem::path source_path_;
    std::shared_ptr<const Bytes> raw_;
    std::vector<ApkEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::string> warnings_;
};

namespace detail {

inline constexpr std::uint32_t zip_eocd_sig = 0x06054b50;
inline constexpr std::uint32_t zip64_eocd_sig = 0x06064b50;
inline constexpr std::uint32_t zip64_locator_sig = 0x07064b50;
inline constexpr std::uint32_t zip_central_sig = 0x02014b50;
inline constexpr std::uint32_t zip_local_sig = 0x04034b50;
inline constexpr std::size_t zip_eocd_size = 22;
inline constexpr std::size_t zip_central_size = 46;
inline constexpr std::size_t zip_local_size = 30;
// Deflate cannot expand by more than roughly 1032:1.
inline constexpr std::uint64_t max_deflate_ratio = 1032;

struct EndOfCentralDirectory {
    std::uint64_t entry_count = 0;
    std::uint64_t cd_size = 0;
    std::uint64_t cd_offset = 0;
};

inline std::optional<std::size_t> find_eocd(ByteView data)
{
    if (data.size() < zip_eocd_size) {
        return std::nullopt;
    }
    const std::size_t last = data.size() - zip_eocd_size;
    const std::size_t first = last > 0xffff ? last - 0xffff : 0;
    for (std::size_t pos = last + 1; pos-- > first;) {
        if (load_u32(data, pos) != zip_eocd_sig) {
            continue;
        }
        // The comment must run exactly to the end of the file.
        if (pos + zip_eocd_size + load_u16(data, pos + 20) == data.size()) {
            return pos;
        }
    }
    // Tolerate trailing garbage after a well-formed record.
    for (std::size_t pos = last + 1; pos-- > first;) {
        if (load_u32(data, pos) == zip_eocd_sig) {
            return pos;
        }
    }
    return std::nullopt;
}

inline EndOfCentralDirectory read_eocd(ByteView data, std::size_t pos)
{
    EndOfCentralDirectory eocd;
    eocd.entry_count = load_u16(data, pos + 10);
    eocd.cd_size = load_u32(data, pos + 12);
    eocd.cd_offset = load_u32(data, pos + 16);

    const bool wants_zip64 =
        eocd.entry_count == 0xffff || eocd.cd_size == 0xffffffff || eocd.cd_offset == 0xffffffff;
    if (wants_zip64 && pos >= 20 && load_u32(data, pos - 20) == zip64_locator_sig) {
        const std::uint64_t rec = load_u64(data, pos - 20 + 8);
        if (!in_bounds(rec, 56, data.size()) || load_u32(data, rec) != zip64_eocd_sig) {
            throw Error(ErrorCode::TruncatedArchive, "bad ZIP64 end-of-central-directory record");
        }
        eocd.entry_count = load_u64(data, rec + 32);
        eocd.cd_size = load_u64(data, rec + 40);
        eocd.cd_offset = load_u64(data, rec + 48);
    }
    return eocd;
}

inline void apply_zip64_extra(ByteView extra, ApkEntry& entry, bool need_usize, bool need_csize,
                              bool need_offset)
{
    std::size_t pos = 0;
    while (pos + 4 <= extra.size()) {
        const std::uint16_t id = load_u16(extra, pos);
        const std::uint16_t len = load_u16(extra, pos + 2);
        if (pos + 4 + len > extra.size()) {
            break;
        }
        if (id == 0x0001) {
            std::size_t field = pos + 4;
            const std::size_t end = field + len;
            auto take = [&](std::uint64_t& out) {
                if (field + 8 > end) {
                    throw Error(ErrorCode::TruncatedArchive, "short ZIP64 extra field in " + entry.name);
                }
                out = load_u64(extra, field);
                field += 8;
            };
            if (need_usize) take(entry.uncompressed_size);
            if (need_csize) take(entry.compressed_size);
            if (need_offset) take(entry.local_header_offset);
            return;
        }
        pos += 4 + len;
    }
}

/// Natural-order key for `classes*.dex`: classes.dex is 1, classesN.dex is N.
inline std::optional<std::uint64_t> dex_ordinal(std::string_view name)
{
    constexpr std::string_view prefix = "classes";
    constexpr std::string_view suffix = ".dex";
    if (name.size() < prefix.size() + suffix.size() || !name.starts_with(prefix) ||
        !name.ends_with(suffix)) {
        return std::nullopt;
    }
    const std::string_view digits =
        name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (digits.empty()) {
        return 1;
    }
    std::uint64_t n = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc{} || ptr != digits.data() + digits.size()) {
        return std::nullopt;
    }
    return n;
}

inline Bytes inflate_raw(ByteView input, std::uint64_t expected, const std::string& name)
{
    Bytes out(static_cast<std::size_t>(expected));
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
        throw Error(ErrorCode::IoError, "zlib init failed");
    }
    zs.next_in = const_cast<Bytef*>(input.data());
    zs.avail_in = static_cast<uInt>(input.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    if (rc == Z_BUF_ERROR && zs.avail_out == 0) {
        // Output full: check whether the stream really ends here.
        std::uint8_t probe = 0;
        zs.next_out = &probe;
        zs.avail_out = 1;
        rc = inflate(&zs, Z_FINISH);
        if (rc != Z_STREAM_END || zs.avail_out == 0) {
            inflateEnd(&zs);
            throw Error(ErrorCode::ChecksumMismatch, name + ": inflated data exceeds declared size");
        }
    }
    const auto produced = zs.total_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END) {
        throw Error(ErrorCode::ChecksumMismatch, name + ": corrupt deflate stream");
    }
    if (produced != expected) {
        throw Error(ErrorCode::ChecksumMismatch, name + ": inflated size differs from header");
    }
    return out;
}

} // namespace detail

/// Parses a ZIP held in memory. Duplicate names keep the last central
/// directory occurrence and leave a warning on the archive.
inline ApkArchive open_apk_bytes(Bytes bytes, std::filesystem::path source = {})
{
    using namespace detail;
    ApkArchive archive;
    archive.source_path_ = std::move(source);
    auto raw = std::make_shared<const Bytes>(std::move(bytes));
    const ByteView data(*raw);

    const auto eocd_pos = find_eocd(data);
    if (!eocd_pos) {
        throw Error(ErrorCode::NotAZip, "no end-of-central-directory record in " +
                                            archive.source_path_.string());
    }
    const EndOfCentralDirectory eocd = read_eocd(data, *eocd_pos);
    if (!in_bounds(eocd.cd_offset, eocd.cd_size, data.size())) {
        throw Error(ErrorCode::TruncatedArchive, "central directory lies outside the file");
    }
    if (eocd.entry_count > eocd.cd_size / zip_central_size + 1) {
        throw Error(ErrorCode::TruncatedArchive, "central directory too small for entry count");
    }

    std::vector<ApkEntry> all;
    all.reserve(static_cast<std::size_t>(eocd.entry_count));
    std::uint64_t pos = eocd.cd_offset;
    const std::uint64_t cd_end = eocd.cd_offset + eocd.cd_size;
    for (std::uint64_t i = 0; i < eocd.entry_count; ++i) {
        if (!in_bounds(pos, zip_central_size, cd_end) || load_u32(data, pos) != zip_central_sig) {
            throw Error(ErrorCode::TruncatedArchive, "central directory entry " + std::to_string(i) +
                                                         " is truncated or corrupt");
        }
        ApkEntry e;
        e.flags = load_u16(data, pos + 8);
        e.method = load_u16(data, pos + 10);
        e.crc32 = load_u32(data, pos + 16);
        e.compressed_size = load_u32(data, pos + 20);
        e.uncompressed_size = load_u32(data, pos + 24);
        const std::uint16_t name_len = load_u16(data, pos + 28);
        const std::uint16_t extra_len = load_u16(data, pos + 30);
        const std::uint16_t comment_len = load_u16(data, pos + 32);
        e.local_header_offset = load_u32(data, pos + 42);
        const std::uint64_t var_len = std::uint64_t{name_len} + extra_len + comment_len;
        if (!in_bounds(pos + zip_central_size, var_len, cd_end)) {
            throw Error(ErrorCode::TruncatedArchive, "central directory entry name overruns");
        }
        const auto* name_ptr = reinterpret_cast<const char*>(data.data() + pos + zip_central_size);
        e.name.assign(name_ptr, name_len);
        apply_zip64_extra(data.subspan(pos + zip_central_size + name_len, extra_len), e,
                          e.uncompressed_size == 0xffffffff, e.compressed_size == 0xffffffff,
                          e.local_header_offset == 0xffffffff);
        all.push_back(std::move(e));
        pos += zip_central_size + var_len;
    }

    // Last occurrence wins, at the position of that occurrence.
    std::unordered_map<std::string, std::size_t> last;
    for (std::size_t i = 0; i < all.size(); ++i) {
        last[all[i].name] = i;
    }
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (last[all[i].name] != i) {
            archive.warnings_.push_back("duplicate entry '" + all[i].name +
                                        "': keeping the last central directory occurrence");
            continue;
        }
        archive.index_.emplace(all[i].name, archive.entries_.size());
        archive.entries_.push_back(std::move(all[i]));
    }
    archive.raw_ = std::move(raw);
    return archive;
}

inline ApkArchive open_apk(const std::filesystem::path& path)
{
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(ErrorCode::IoError, "not a readable file: " + path.string());
    }
    return open_apk_bytes(detail::read_file(path), path);
}

/// Fully decompressed, CRC-verified entry payload.
inline Bytes read_entry(const ApkArchive& archive, std::string_view name)
{
    using namespace detail;
    const ApkEntry* e = archive.find(name);
    if (e == nullptr) {
        throw Error(ErrorCode::EntryNotFound, std::string(name));
    }
    const ByteView data = archive.raw_bytes();
    if (!in_bounds(e->local_header_offset, zip_local_size, data.size()) ||
        load_u32(data, e->local_header_offset) != zip_local_sig) {
        throw Error(ErrorCode::TruncatedArchive, e->name + ": bad local header");
    }
    const std::uint64_t payload = e->local_header_offset + zip_local_size +
                                  load_u16(data, e->local_header_offset + 26) +
                                  load_u16(data, e->local_header_offset + 28);
    if (!in_bounds(payload, e->compressed_size, data.size())) {
        throw Error(ErrorCode::TruncatedArchive, e->name + ": payload overruns the file");
    }
    if (e->flags & 0x1) {
        throw Error(ErrorCode::UnsupportedCompressionMethod, e->name + ": encrypted entry");
    }
    const ByteView body = data.subspan(payload, e->compressed_size);

    Bytes out;
    switch (e->method) {
    case 0:
        if (e->compressed_size != e->uncompressed_size) {
            throw Error(ErrorCode::ChecksumMismatch, e->name + ": stored entry size mismatch");
        }
        out.assign(body.begin(), body.end());
        break;
    case 8:
        if (e->uncompressed_size > e->compressed_size * max_deflate_ratio + 1024) {
            throw Error(ErrorCode::ChecksumMismatch,
                        e->name + ": declared size impossible for its compressed length");
        }
        out = inflate_raw(body, e->uncompressed_size, e->name);
        break;
    default:
        throw Error(ErrorCode::UnsupportedCompressionMethod,
                    e->name + ": method " + std::to_string(e->method));
    }

    const auto crc = static_cast<std::uint32_t>(
        ::crc32_z(::crc32_z(0L, Z_NULL, 0), out.data(), out.size()));
    if (crc != e->crc32) {
        throw Error(ErrorCode::ChecksumMismatch, e->name);
    }
    return out;
}

/// Names of root-level `classes*.dex` entries in ascending numeric order.
inline std::vector<std::string> dex_entry_names(const ApkArchive& archive)
{
    std::vector<std::pair<std::uint64_t, std::string>> found;
    for (const auto& e : archive.entries()) {
        if (auto n = detail::dex_ordinal(e.name)) {
            found.emplace_back(*n, e.name);
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<std::string> names;
    names.reserve(found.size());
    for (auto& [n, name] : found) {
        names.push_back(std::move(name));
    }
    return names;
}

inline Bytes collect_code_bytes(const ApkArchive& archive, CodeSource source = CodeSource::DexOnly)
{
    if (source == CodeSource::WholeFile) {
        const ByteView raw = archive.raw_bytes();
        return {raw.begin(), raw.end()};
    }
    const auto names = dex_entry_names(archive);
    if (names.empty()) {
        throw Error(ErrorCode::NoDexFound, archive.source_path().string());
    }
    Bytes out;
    for (const auto& name : names) {
        const Bytes part = read_entry(archive, name);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

} // namespace apkvis
