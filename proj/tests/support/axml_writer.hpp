#pragma once

// Reference encoder for Android binary XML, written from the chunk layout
// and independent of the decoder under test.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zip_writer.hpp"

namespace testsupport {

inline constexpr const char* android_uri = "http://schemas.android.com/apk/res/android";

struct AxAttr {
    std::string ns;   // namespace URI, empty for none
    std::string name;
    std::uint8_t type = 0x03;
    std::string str;  // for type 0x03
    std::uint32_t data = 0;
    std::optional<std::uint32_t> res_id;

    static AxAttr string(std::string ns, std::string name, std::string v)
    {
        return {std::move(ns), std::move(name), 0x03, std::move(v), 0, {}};
    }
    static AxAttr typed(std::string ns, std::string name, std::uint8_t type, std::uint32_t data)
    {
        return {std::move(ns), std::move(name), type, {}, data, {}};
    }
};

class AxmlWriter {
public:
    explicit AxmlWriter(bool utf8 = false) : utf8_(utf8) {}

    AxmlWriter& start_namespace(const std::string& prefix, const std::string& uri)
    {
        ev_.push_back({Ev::StartNs, prefix, uri, {}});
        return *this;
    }
    AxmlWriter& end_namespace(const std::string& prefix, const std::string& uri)
    {
        ev_.push_back({Ev::EndNs, prefix, uri, {}});
        return *this;
    }
    AxmlWriter& start(const std::string& name, std::vector<AxAttr> attrs = {}, const std::string& ns = {})
    {
        ev_.push_back({Ev::Start, ns, name, std::move(attrs)});
        return *this;
    }
    AxmlWriter& end(const std::string& name, const std::string& ns = {})
    {
        ev_.push_back({Ev::End, ns, name, {}});
        return *this;
    }
    AxmlWriter& text(const std::string& t)
    {
        ev_.push_back({Ev::Text, {}, t, {}});
        return *this;
    }
    /// Appends an arbitrary chunk of the given type (skipped by readers).
    AxmlWriter& raw_chunk(std::uint16_t type, std::size_t payload)
    {
        ev_.push_back({Ev::Raw, {}, std::string(payload, '\0'), {}});
        ev_.back().raw_type = type;
        return *this;
    }

    Bytes finish()
    {
        // Attribute names with resource ids occupy the first pool slots so
        // the resource map lines up with them.
        for (const auto& e : ev_) {
            for (const auto& a : e.attrs) {
                if (a.res_id && !index_.count(a.name)) {
                    intern(a.name);
                    res_ids_.push_back(*a.res_id);
                }
            }
        }
        for (const auto& e : ev_) {
            switch (e.kind) {
            case Ev::StartNs:
            case Ev::EndNs:
                intern(e.a);
                intern(e.b);
                break;
            case Ev::Start:
            case Ev::End:
                if (!e.a.empty()) intern(e.a);
                intern(e.b);
                for (const auto& a : e.attrs) {
                    if (!a.ns.empty()) intern(a.ns);
                    intern(a.name);
                    if (a.type == 0x03) intern(a.str);
                }
                break;
            case Ev::Text:
                intern(e.b);
                break;
            case Ev::Raw:
                break;
            }
        }

        Bytes body = string_pool();
        if (!res_ids_.empty()) {
            put16(body, 0x0180);
            put16(body, 8);
            put32(body, static_cast<std::uint32_t>(8 + 4 * res_ids_.size()));
            for (auto id : res_ids_) put32(body, id);
        }
        std::uint32_t line = 1;
        for (const auto& e : ev_) {
            Bytes c;
            auto node_header = [&](std::uint16_t type) {
                put16(c, type);
                put16(c, 16);
                put32(c, 0);
                put32(c, line++);
                put32(c, 0xffffffff);
            };
            switch (e.kind) {
            case Ev::StartNs:
            case Ev::EndNs:
                node_header(e.kind == Ev::StartNs ? 0x0100 : 0x0101);
                put32(c, idx(e.a));
                put32(c, idx(e.b));
                break;
            case Ev::Start:
                node_header(0x0102);
                put32(c, e.a.empty() ? 0xffffffff : idx(e.a));
                put32(c, idx(e.b));
                put16(c, 20);
                put16(c, 20);
                put16(c, static_cast<std::uint32_t>(e.attrs.size()));
                put16(c, 0);
                put16(c, 0);
                put16(c, 0);
                for (const auto& a : e.attrs) {
                    put32(c, a.ns.empty() ? 0xffffffff : idx(a.ns));
                    put32(c, idx(a.name));
                    const std::uint32_t sval = a.type == 0x03 ? idx(a.str) : 0xffffffff;
                    put32(c, sval);
                    put16(c, 8);
                    c.push_back(0);
                    c.push_back(a.type);
                    put32(c, a.type == 0x03 ? sval : a.data);
                }
                break;
            case Ev::End:
                node_header(0x0103);
                put32(c, e.a.empty() ? 0xffffffff : idx(e.a));
                put32(c, idx(e.b));
                break;
            case Ev::Text:
                node_header(0x0104);
                put32(c, idx(e.b));
                put16(c, 8);
                c.push_back(0);
                c.push_back(0);
                put32(c, 0);
                break;
            case Ev::Raw:
                put16(c, e.raw_type);
                put16(c, 8);
                put32(c, 0);
                c.insert(c.end(), e.b.begin(), e.b.end());
                break;
            }
            set32(c, 4, static_cast<std::uint32_t>(c.size()));
            body.insert(body.end(), c.begin(), c.end());
        }
        Bytes doc;
        put16(doc, 0x0003);
        put16(doc, 8);
        put32(doc, static_cast<std::uint32_t>(8 + body.size()));
        doc.insert(doc.end(), body.begin(), body.end());
        return doc;
    }

    const std::vector<std::string>& pool() const { return pool_; }

private:
    struct Ev {
        enum Kind { StartNs, EndNs, Start, End, Text, Raw } kind;
        std::string a; // namespace URI / prefix
        std::string b; // name / uri / text
        std::vector<AxAttr> attrs;
        std::uint16_t raw_type = 0;
    };

    void intern(const std::string& s)
    {
        if (index_.emplace(s, static_cast<std::uint32_t>(pool_.size())).second) {
            pool_.push_back(s);
        }
    }
    std::uint32_t idx(const std::string& s) const { return index_.at(s); }

    static std::u16string to_utf16(const std::string& s)
    {
        std::u16string out;
        for (std::size_t i = 0; i < s.size();) {
            const auto c = static_cast<unsigned char>(s[i]);
            char32_t cp;
            int n;
            if (c < 0x80) { cp = c; n = 1; }
            else if ((c >> 5) == 6) { cp = c & 0x1f; n = 2; }
            else if ((c >> 4) == 14) { cp = c & 0x0f; n = 3; }
            else { cp = c & 0x07; n = 4; }
            for (int k = 1; k < n; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3f);
            i += n;
            if (cp >= 0x10000) {
                cp -= 0x10000;
                out.push_back(static_cast<char16_t>(0xd800 + (cp >> 10)));
                out.push_back(static_cast<char16_t>(0xdc00 + (cp & 0x3ff)));
            } else {
                out.push_back(static_cast<char16_t>(cp));
            }
        }
        return out;
    }

    Bytes string_pool() const
    {
        Bytes data;
        std::vector<std::uint32_t> offsets;
        for (const auto& s : pool_) {
            offsets.push_back(static_cast<std::uint32_t>(data.size()));
            const std::u16string u = to_utf16(s);
            if (utf8_) {
                auto varlen = [&](std::size_t v) {
                    if (v > 0x7f) data.push_back(static_cast<std::uint8_t>(0x80 | (v >> 8)));
                    data.push_back(static_cast<std::uint8_t>(v & 0xff));
                };
                varlen(u.size());
                varlen(s.size());
                data.insert(data.end(), s.begin(), s.end());
                data.push_back(0);
            } else {
                if (u.size() > 0x7fff) {
                    put16(data, 0x8000 | static_cast<std::uint32_t>(u.size() >> 16));
                }
                put16(data, static_cast<std::uint32_t>(u.size() & 0xffff));
                for (char16_t ch : u) put16(data, ch);
                put16(data, 0);
            }
        }
        while (data.size() % 4) data.push_back(0);

        Bytes c;
        const std::uint32_t header = 28;
        const std::uint32_t strings_start = header + 4 * static_cast<std::uint32_t>(pool_.size());
        put16(c, 0x0001);
        put16(c, header);
        put32(c, strings_start + static_cast<std::uint32_t>(data.size()));
        put32(c, static_cast<std::uint32_t>(pool_.size()));
        put32(c, 0);
        put32(c, utf8_ ? 0x100 : 0);
        put32(c, strings_start);
        put32(c, 0);
        for (auto o : offsets) put32(c, o);
        c.insert(c.end(), data.begin(), data.end());
        return c;
    }

    bool utf8_;
    std::vector<Ev> ev_;
    std::vector<std::string> pool_;
    std::map<std::string, std::uint32_t> index_;
    std::vector<std::uint32_t> res_ids_;
};

/// A typical manifest: package attribute, android namespace, one
/// uses-permission per entry, and an application with one activity.
inline Bytes manifest_axml(const std::string& package, const std::vector<std::string>& permissions,
                           bool utf8 = false)
{
    AxmlWriter w(utf8);
    w.start_namespace("android", android_uri);
    auto name_attr = [](const std::string& v) {
        AxAttr a = AxAttr::string(android_uri, "name", v);
        a.res_id = 0x01010003;
        return a;
    };
    AxAttr version = AxAttr::typed(android_uri, "versionCode", 0x10, 7);
    version.res_id = 0x0101021b;
    w.start("manifest", {version, AxAttr::string({}, "package", package)});
    for (const auto& p : permissions) {
        w.start("uses-permission", {name_attr(p)}).end("uses-permission");
    }
    w.start("application", {AxAttr::typed(android_uri, "debuggable", 0x12, 0xffffffff)});
    w.start("activity", {name_attr(package + ".MainActivity")});
    w.start("intent-filter").start("action", {name_attr("android.intent.action.MAIN")}).end("action");
    w.end("intent-filter").end("activity").end("application").end("manifest");
    w.end_namespace("android", android_uri);
    return w.finish();
}

} // namespace testsupport
