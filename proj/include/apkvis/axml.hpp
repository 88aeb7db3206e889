#pragma once

// Android binary XML (AXML) decoding into a manifest model.
//
// Layout: a 0x0003 document chunk whose body is a sequence of chunks
// (string pool, resource map, namespace and element nodes). Every chunk
// starts with {u16 type, u16 header_size, u32 chunk_size}, little-endian.

#include <array>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "apkvis/detail/bytes.hpp"
#include "apkvis/error.hpp"
#include "apkvis/xml_text.hpp"

namespace apkvis {

namespace axml {
inline constexpr std::uint16_t string_pool_type = 0x0001;
inline constexpr std::uint16_t xml_type = 0x0003;
inline constexpr std::uint16_t start_namespace_type = 0x0100;
inline constexpr std::uint16_t end_namespace_type = 0x0101;
inline constexpr std::uint16_t start_element_type = 0x0102;
inline constexpr std::uint16_t end_element_type = 0x0103;
inline constexpr std::uint16_t cdata_type = 0x0104;
inline constexpr std::uint16_t resource_map_type = 0x0180;

inline constexpr std::uint32_t utf8_flag = 1u << 8;
inline constexpr std::uint32_t sorted_flag = 1u << 0;
inline constexpr std::uint32_t no_index = 0xffffffff;

// Res_value data types.
inline constexpr std::uint8_t type_null = 0x00;
inline constexpr std::uint8_t type_reference = 0x01;
inline constexpr std::uint8_t type_attribute = 0x02;
inline constexpr std::uint8_t type_string = 0x03;
inline constexpr std::uint8_t type_int_dec = 0x10;
inline constexpr std::uint8_t type_int_hex = 0x11;
inline constexpr std::uint8_t type_int_boolean = 0x12;

inline constexpr std::string_view android_ns = "http://schemas.android.com/apk/res/android";
} // namespace axml

struct AxmlChunk {
    std::uint16_t chunk_type = 0;
    std::uint16_t header_size = 0;
    std::uint32_t chunk_size = 0;
    std::size_t offset = 0; // absolute offset of the chunk header
};

enum class StringEncoding { Utf8, Utf16Le };

struct StringPool {
    std::vector<std::string> strings; // UTF-8
    StringEncoding encoding = StringEncoding::Utf16Le;
    bool sorted_flag = false;

    const std::string& at(std::uint32_t index) const
    {
        if (index >= strings.size()) {
            throw Error(ErrorCode::StringIndexOutOfRange,
                        std::to_string(index) + " >= " + std::to_string(strings.size()));
        }
        return strings[index];
    }
};

enum class ComponentKind { Activity, Service, Receiver, Provider };

constexpr std::string_view to_string(ComponentKind k) noexcept
{
    switch (k) {
    case ComponentKind::Activity: return "activity";
    case ComponentKind::Service: return "service";
    case ComponentKind::Receiver: return "receiver";
    case ComponentKind::Provider: return "provider";
    }
    return "activity";
}

struct Component {
    ComponentKind kind;
    std::string name;

    friend bool operator==(const Component&, const Component&) = default;
};

struct ManifestModel {
    std::string package_name;
    std::vector<std::string> permissions; // document order, unique
    std::vector<Component> components;
    std::vector<std::string> intent_actions;
    std::string raw_xml;
    XmlElement root;
    /// Top-level chunks in document order; empty for plain-text input.
    std::vector<AxmlChunk> chunks;
    std::size_t document_size = 0;
};

namespace detail {

/// android.R.attr ids for when the string pool hides attribute names.
inline std::string_view known_attribute_name(std::uint32_t res_id) noexcept
{
    switch (res_id) {
    case 0x01010000: return "theme";
    case 0x01010001: return "label";
    case 0x01010002: return "icon";
    case 0x01010003: return "name";
    case 0x01010006: return "permission";
    case 0x0101000e: return "enabled";
    case 0x01010010: return "exported";
    case 0x0101001d: return "authorities";
    case 0x0101020c: return "minSdkVersion";
    case 0x0101021b: return "versionCode";
    case 0x0101021c: return "versionName";
    case 0x01010270: return "targetSdkVersion";
    case 0x0101026c: return "installLocation";
    case 0x01010280: return "debuggable";
    case 0x0101028e: return "allowBackup";
    case 0x0101001f: return "priority";
    default: return {};
    }
}

inline std::string sanitize_xml_name(std::string_view raw)
{
    std::string out;
    for (char c : raw) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '_' || c == '-' || c == '.' || c == ':';
        out.push_back(ok ? c : '_');
    }
    if (out.empty() || !((out[0] >= 'a' && out[0] <= 'z') || (out[0] >= 'A' && out[0] <= 'Z') || out[0] == '_')) {
        out.insert(out.begin(), '_');
    }
    return out;
}

inline std::string hex32(std::uint32_t v)
{
    std::array<char, 11> buf{};
    std::snprintf(buf.data(), buf.size(), "0x%08x", v);
    return buf.data();
}

inline StringPool parse_string_pool(ByteView chunk, std::uint16_t header_size)
{
    if (header_size < 28 || chunk.size() < header_size) {
        throw Error(ErrorCode::TruncatedChunk, "string pool header");
    }
    StringPool pool;
    const std::uint32_t count = load_u32(chunk, 8);
    const std::uint32_t style_count = load_u32(chunk, 12);
    const std::uint32_t flags = load_u32(chunk, 16);
    const std::uint32_t strings_start = load_u32(chunk, 20);
    pool.encoding = (flags & axml::utf8_flag) ? StringEncoding::Utf8 : StringEncoding::Utf16Le;
    pool.sorted_flag = (flags & axml::sorted_flag) != 0;

    const std::uint64_t offsets_bytes = (std::uint64_t{count} + style_count) * 4;
    if (!in_bounds(header_size, offsets_bytes, chunk.size())) {
        throw Error(ErrorCode::TruncatedChunk, "string pool offset table");
    }
    if (count > 0 && strings_start >= chunk.size()) {
        throw Error(ErrorCode::StringIndexOutOfRange, "string data starts outside the pool");
    }

    pool.strings.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint64_t off = std::uint64_t{strings_start} + load_u32(chunk, header_size + 4ull * i);
        std::string decoded;
        if (pool.encoding == StringEncoding::Utf8) {
            // u16 length (chars) then u8 length (bytes), each 1 or 2 bytes.
            auto varlen = [&](std::uint64_t& p) -> std::uint32_t {
                if (p >= chunk.size()) {
                    throw Error(ErrorCode::StringIndexOutOfRange, "string " + std::to_string(i));
                }
                std::uint32_t v = chunk[p++];
                if (v & 0x80) {
                    if (p >= chunk.size()) {
                        throw Error(ErrorCode::StringIndexOutOfRange, "string " + std::to_string(i));
                    }
                    v = ((v & 0x7f) << 8) | chunk[p++];
                }
                return v;
            };
            std::uint64_t p = off;
            varlen(p);
            const std::uint32_t nbytes = varlen(p);
            if (!in_bounds(p, nbytes, chunk.size())) {
                throw Error(ErrorCode::StringIndexOutOfRange, "string " + std::to_string(i));
            }
            const std::string_view raw(reinterpret_cast<const char*>(chunk.data() + p), nbytes);
            std::size_t q = 0;
            while (q < raw.size()) {
                append_utf8(decoded, next_utf8(raw, q));
            }
        } else {
            std::uint64_t p = off;
            if (!in_bounds(p, 2, chunk.size())) {
                throw Error(ErrorCode::StringIndexOutOfRange, "string " + std::to_string(i));
            }
            std::uint32_t len = load_u16(chunk, p);
            p += 2;
            if (len & 0x8000) {
                if (!in_bounds(p, 2, chunk.size())) {
                    throw Error(ErrorCode::StringIndexOutOfRange, "string " + std::to_string(i));
                }
                len = ((len & 0x7fff) << 16) | load_u16(chunk, p);
                p += 2;
            }
            if (!in_bounds(p, 2ull * len, chunk.size())) {
                throw Error(ErrorCode::StringIndexOutOfRange, "string " + std::to_string(i));
            }
            for (std::uint32_t k = 0; k < len; ++k) {
                const char16_t u = load_u16(chunk, p + 2ull * k);
                if (u >= 0xd800 && u <= 0xdbff && k + 1 < len) {
                    const char16_t lo = load_u16(chunk, p + 2ull * (k + 1));
                    if (lo >= 0xdc00 && lo <= 0xdfff) {
                        append_utf8(decoded, 0x10000 + ((char32_t{u} - 0xd800) << 10) + (lo - 0xdc00));
                        ++k;
                        continue;
                    }
                }
                append_utf8(decoded, (u >= 0xd800 && u <= 0xdfff) ? char32_t{0xfffd} : char32_t{u});
            }
        }
        pool.strings.push_back(std::move(decoded));
    }
    return pool;
}

class AxmlDecoder {
public:
    explicit AxmlDecoder(ByteView data) : data_(data) {}

    ManifestModel decode()
    {
        if (data_.size() < 8) {
            throw Error(ErrorCode::TruncatedChunk, "document header");
        }
        const std::uint16_t header_size = load_u16(data_, 2);
        const std::uint32_t doc_size = load_u32(data_, 4);
        if (header_size < 8 || header_size > doc_size || doc_size > data_.size()) {
            throw Error(ErrorCode::TruncatedChunk, "document size " + std::to_string(doc_size) +
                                                       " vs input " + std::to_string(data_.size()));
        }
        model_.document_size = doc_size;
        model_.chunks.push_back({axml::xml_type, header_size, doc_size, 0});

        std::size_t pos = header_size;
        while (pos < doc_size) {
            if (!in_bounds(pos, 8, doc_size)) {
                throw Error(ErrorCode::TruncatedChunk, "chunk header at " + std::to_string(pos));
            }
            AxmlChunk c;
            c.chunk_type = load_u16(data_, pos);
            c.header_size = load_u16(data_, pos + 2);
            c.chunk_size = load_u32(data_, pos + 4);
            c.offset = pos;
            if (c.header_size < 8 || c.header_size > c.chunk_size || !in_bounds(pos, c.chunk_size, doc_size)) {
                throw Error(ErrorCode::TruncatedChunk, "chunk at " + std::to_string(pos));
            }
            model_.chunks.push_back(c);
            handle(c, data_.subspan(pos, c.chunk_size));
            pos += c.chunk_size;
        }
        if (!stack_.empty()) {
            throw Error(ErrorCode::TruncatedChunk, "unclosed element " + stack_.back().name);
        }
        if (!have_root_) {
            throw Error(ErrorCode::TruncatedChunk, "document has no root element");
        }
        model_.root = std::move(root_);
        model_.raw_xml = to_xml_text(model_.root);
        return std::move(model_);
    }

private:
    void handle(const AxmlChunk& c, ByteView chunk)
    {
        switch (c.chunk_type) {
        case axml::string_pool_type:
            pool_ = parse_string_pool(chunk, c.header_size);
            break;
        case axml::resource_map_type:
            res_ids_.clear();
            for (std::size_t p = c.header_size; p + 4 <= chunk.size(); p += 4) {
                res_ids_.push_back(load_u32(chunk, p));
            }
            break;
        case axml::start_namespace_type: {
            require_node(c, chunk, 8);
            const std::uint32_t prefix = load_u32(chunk, c.header_size);
            const std::uint32_t uri = load_u32(chunk, c.header_size + 4);
            const std::string p = prefix == axml::no_index ? "" : sanitize_xml_name(pool_.at(prefix));
            const std::string& u = uri == axml::no_index ? empty_ : pool_.at(uri);
            prefixes_[u] = p;
            pending_ns_.push_back({p.empty() ? "xmlns" : "xmlns:" + p, u});
            break;
        }
        case axml::end_namespace_type:
            break;
        case axml::start_element_type:
            start_element(c, chunk);
            break;
        case axml::end_element_type: {
            require_node(c, chunk, 8);
            if (stack_.empty()) {
                throw Error(ErrorCode::MalformedAttribute, "end element without start");
            }
            XmlElement done = std::move(stack_.back());
            stack_.pop_back();
            trim_text(done.text);
            if (stack_.empty()) {
                if (have_root_) {
                    throw Error(ErrorCode::MalformedAttribute, "second root element");
                }
                root_ = std::move(done);
                have_root_ = true;
            } else {
                stack_.back().children.push_back(std::move(done));
            }
            break;
        }
        case axml::cdata_type: {
            require_node(c, chunk, 4);
            const std::uint32_t idx = load_u32(chunk, c.header_size);
            if (!stack_.empty() && idx != axml::no_index) {
                stack_.back().text += pool_.at(idx);
            }
            break;
        }
        default:
            // Unknown chunk: skipped by size.
            break;
        }
    }

    static void require_node(const AxmlChunk& c, ByteView chunk, std::size_t ext_size)
    {
        if (c.header_size < 16 || !in_bounds(c.header_size, ext_size, chunk.size())) {
            throw Error(ErrorCode::TruncatedChunk, "XML node at " + std::to_string(c.offset));
        }
    }

    std::string qualify(std::uint32_t ns, std::uint32_t name_idx)
    {
        std::string local = name_idx == axml::no_index ? "" : pool_.at(name_idx);
        if (local.empty() && name_idx != axml::no_index && name_idx < res_ids_.size()) {
            local = known_attribute_name(res_ids_[name_idx]);
            if (local.empty()) {
                local = "attr_" + hex32(res_ids_[name_idx]).substr(2);
            }
        }
        local = sanitize_xml_name(local);
        if (ns == axml::no_index) {
            return local;
        }
        const std::string& uri = pool_.at(ns);
        auto it = prefixes_.find(uri);
        if (it != prefixes_.end() && !it->second.empty()) {
            return it->second + ":" + local;
        }
        if (uri == axml::android_ns) {
            return "android:" + local;
        }
        return local;
    }

    std::string render_value(std::uint32_t raw_value, std::uint8_t type, std::uint32_t data)
    {
        switch (type) {
        case axml::type_string:
            return pool_.at(raw_value != axml::no_index ? raw_value : data);
        case axml::type_int_boolean:
            return data != 0 ? "true" : "false";
        case axml::type_int_dec:
            return std::to_string(static_cast<std::int32_t>(data));
        case axml::type_int_hex:
            return hex32(data);
        case axml::type_reference:
            return "@" + hex32(data);
        case axml::type_attribute:
            return "?" + hex32(data);
        default:
            if (raw_value != axml::no_index) {
                return pool_.at(raw_value);
            }
            return hex32(data);
        }
    }

    void start_element(const AxmlChunk& c, ByteView chunk)
    {
        require_node(c, chunk, 20);
        const std::size_t ext = c.header_size;
        const std::uint32_t ns = load_u32(chunk, ext);
        const std::uint32_t name = load_u32(chunk, ext + 4);
        const std::uint16_t attr_start = load_u16(chunk, ext + 8);
        const std::uint16_t attr_size = load_u16(chunk, ext + 10);
        const std::uint16_t attr_count = load_u16(chunk, ext + 12);
        if (attr_count > 0 && attr_size < 20) {
            throw Error(ErrorCode::MalformedAttribute, "attribute record size " + std::to_string(attr_size));
        }
        if (!in_bounds(ext + attr_start, std::uint64_t{attr_size} * attr_count, chunk.size())) {
            throw Error(ErrorCode::MalformedAttribute, "attributes overrun element chunk");
        }
        if (stack_.size() > 512) {
            throw Error(ErrorCode::MalformedAttribute, "nesting too deep");
        }

        XmlElement el;
        el.name = qualify(ns, name);
        el.attributes = std::move(pending_ns_);
        pending_ns_.clear();
        std::unordered_set<std::string> seen;
        for (const auto& a : el.attributes) {
            seen.insert(a.name);
        }
        for (std::uint16_t i = 0; i < attr_count; ++i) {
            const std::size_t a = ext + attr_start + std::size_t{attr_size} * i;
            const std::uint32_t a_ns = load_u32(chunk, a);
            const std::uint32_t a_name = load_u32(chunk, a + 4);
            const std::uint32_t a_raw = load_u32(chunk, a + 8);
            const std::uint8_t a_type = chunk[a + 15];
            const std::uint32_t a_data = load_u32(chunk, a + 16);
            XmlAttribute attr{qualify(a_ns, a_name), render_value(a_raw, a_type, a_data)};
            // Keep the tree well-formed when obfuscators repeat a name.
            if (!seen.insert(attr.name).second) {
                continue;
            }
            el.attributes.push_back(std::move(attr));
        }
        stack_.push_back(std::move(el));
    }

    static void trim_text(std::string& s)
    {
        const auto is_ws = [](char ch) { return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r'; };
        std::size_t b = 0;
        std::size_t e = s.size();
        while (b < e && is_ws(s[b])) ++b;
        while (e > b && is_ws(s[e - 1])) --e;
        s = s.substr(b, e - b);
    }

    ByteView data_;
    ManifestModel model_;
    StringPool pool_;
    std::vector<std::uint32_t> res_ids_;
    std::unordered_map<std::string, std::string> prefixes_;
    std::vector<XmlAttribute> pending_ns_;
    std::vector<XmlElement> stack_;
    XmlElement root_;
    bool have_root_ = false;
    const std::string empty_;
};

inline void collect_manifest_fields(ManifestModel& model)
{
    if (const auto* pkg = model.root.attribute("package")) {
        model.package_name = *pkg;
    }
    std::unordered_set<std::string> seen_action;
    auto visit = [&](auto&& self, const XmlElement& el) -> void {
        const std::string* name = el.attribute("android:name");
        if (name != nullptr) {
            if (el.name == "activity" || el.name == "activity-alias") {
                model.components.push_back({ComponentKind::Activity, *name});
            } else if (el.name == "service") {
                model.components.push_back({ComponentKind::Service, *name});
            } else if (el.name == "receiver") {
                model.components.push_back({ComponentKind::Receiver, *name});
            } else if (el.name == "provider") {
                model.components.push_back({ComponentKind::Provider, *name});
            } else if (el.name == "action") {
                if (seen_action.insert(*name).second) {
                    model.intent_actions.push_back(*name);
                }
            }
        }
        for (const auto& child : el.children) {
            self(self, child);
        }
    };
    visit(visit, model.root);
}

} // namespace detail

/// `android:name` of every `uses-permission` element, in document order,
/// first occurrence kept.
inline std::vector<std::string> extract_permissions(const ManifestModel& model)
{
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    auto visit = [&](auto&& self, const XmlElement& el) -> void {
        if (el.name == "uses-permission") {
            if (const auto* name = el.attribute("android:name"); name && seen.insert(*name).second) {
                out.push_back(*name);
            }
        }
        for (const auto& child : el.children) {
            self(self, child);
        }
    };
    visit(visit, model.root);
    return out;
}

/// Accepts binary AXML (first u16 == 0x0003) or plain-text XML starting
/// with '<'.
inline ManifestModel decode_axml(ByteView data)
{
    ManifestModel model;
    if (data.size() >= 2 && detail::load_u16(data, 0) == axml::xml_type) {
        model = detail::AxmlDecoder(data).decode();
    } else if (!data.empty() && data[0] == '<') {
        const std::string_view text(reinterpret_cast<const char*>(data.data()), data.size());
        model.root = parse_xml_text(text);
        model.raw_xml = to_xml_text(model.root);
        model.document_size = data.size();
    } else {
        throw Error(ErrorCode::NotAxml, "neither binary AXML nor text XML");
    }
    detail::collect_manifest_fields(model);
    model.permissions = extract_permissions(model);
    return model;
}

} // namespace apkvis
