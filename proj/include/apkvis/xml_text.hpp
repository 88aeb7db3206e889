#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apkvis/error.hpp"

namespace apkvis {

struct XmlAttribute {
    std::string name; // qualified, e.g. "android:name" or "xmlns:android"
    std::string value;

    friend bool operator==(const XmlAttribute&, const XmlAttribute&) = default;
};

struct XmlElement {
    std::string name;
    std::vector<XmlAttribute> attributes;
    std::vector<XmlElement> children;
    std::string text;

    const std::string* attribute(std::string_view qname) const noexcept
    {
        for (const auto& a : attributes) {
            if (a.name == qname) {
                return &a.value;
            }
        }
        return nullptr;
    }

    friend bool operator==(const XmlElement&, const XmlElement&) = default;
};

namespace detail {

inline void append_utf8(std::string& out, char32_t cp)
{
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

/// Decodes one UTF-8 sequence at `pos`; malformed input yields U+FFFD and
/// advances by one byte.
inline char32_t next_utf8(std::string_view s, std::size_t& pos)
{
    const auto b0 = static_cast<unsigned char>(s[pos]);
    auto cont = [&](std::size_t k) {
        return pos + k < s.size() && (static_cast<unsigned char>(s[pos + k]) & 0xc0) == 0x80;
    };
    auto at = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(s[pos + k]) & 0x3f); };
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    if ((b0 & 0xe0) == 0xc0 && b0 >= 0xc2 && cont(1)) {
        char32_t cp = ((b0 & 0x1fu) << 6) | at(1);
        pos += 2;
        return cp;
    }
    if ((b0 & 0xf0) == 0xe0 && cont(1) && cont(2)) {
        char32_t cp = ((b0 & 0x0fu) << 12) | (at(1) << 6) | at(2);
        if (cp >= 0x800 && (cp < 0xd800 || cp > 0xdfff)) {
            pos += 3;
            return cp;
        }
    }
    if ((b0 & 0xf8) == 0xf0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = ((b0 & 0x07u) << 18) | (at(1) << 12) | (at(2) << 6) | at(3);
        if (cp >= 0x10000 && cp <= 0x10ffff) {
            pos += 4;
            return cp;
        }
    }
    ++pos;
    return 0xfffd;
}

constexpr bool xml_char_allowed(char32_t cp) noexcept
{
    return cp == 0x9 || cp == 0xa || cp == 0xd || (cp >= 0x20 && cp <= 0xd7ff) ||
           (cp >= 0xe000 && cp <= 0xfffd) || (cp >= 0x10000 && cp <= 0x10ffff);
}

inline std::string xml_escape(std::string_view s, bool attribute)
{
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) {
        const char32_t cp = next_utf8(s, pos);
        switch (cp) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"':
            if (attribute) {
                out += "&quot;";
            } else {
                out.push_back('"');
            }
            break;
        case '\r':
            out += "&#13;";
            break;
        case '\t':
        case '\n':
            if (attribute) {
                out += "&#" + std::to_string(static_cast<unsigned>(cp)) + ";";
            } else {
                append_utf8(out, cp);
            }
            break;
        default:
            append_utf8(out, xml_char_allowed(cp) ? cp : char32_t{0xfffd});
        }
    }
    return out;
}

inline void write_element(std::string& out, const XmlElement& el, int depth)
{
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += '<';
    out += el.name;
    for (const auto& a : el.attributes) {
        out += ' ';
        out += a.name;
        out += "=\"";
        out += xml_escape(a.value, true);
        out += '"';
    }
    if (el.children.empty() && el.text.empty()) {
        out += "/>\n";
        return;
    }
    out += '>';
    if (el.children.empty()) {
        out += xml_escape(el.text, false);
    } else {
        out += '\n';
        if (!el.text.empty()) {
            out.append(static_cast<std::size_t>(depth + 1) * 2, ' ');
            out += xml_escape(el.text, false);
            out += '\n';
        }
        for (const auto& child : el.children) {
            write_element(out, child, depth + 1);
        }
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
    }
    out += "</";
    out += el.name;
    out += ">\n";
}

class XmlTextParser {
public:
    explicit XmlTextParser(std::string_view src) : src_(src) {}

    XmlElement parse_document()
    {
        skip_misc();
        if (!peek('<')) {
            fail("expected root element");
        }
        XmlElement root = parse_element(0);
        skip_misc();
        if (pos_ != src_.size()) {
            fail("content after root element");
        }
        return root;
    }

private:
    static constexpr int max_depth = 256;

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error(ErrorCode::MalformedXml, msg + " at offset " + std::to_string(pos_));
    }

    bool peek(char c) const noexcept { return pos_ < src_.size() && src_[pos_] == c; }
    bool peek(std::string_view s) const noexcept { return src_.substr(pos_).starts_with(s); }

    void skip_ws()
    {
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\n' || src_[pos_] == '\r')) {
            ++pos_;
        }
    }

    void skip_past(std::string_view terminator)
    {
        const auto end = src_.find(terminator, pos_);
        if (end == std::string_view::npos) {
            fail("unterminated construct");
        }
        pos_ = end + terminator.size();
    }

    void skip_misc()
    {
        for (;;) {
            skip_ws();
            if (peek("<?")) {
                skip_past("?>");
            } else if (peek("<!--")) {
                skip_past("-->");
            } else if (peek("<!DOCTYPE")) {
                skip_past(">");
            } else {
                return;
            }
        }
    }

    static bool name_char(char c) noexcept
    {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
               c == ':' || c == '-' || c == '.' || (static_cast<unsigned char>(c) >= 0x80);
    }

    std::string parse_name()
    {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && name_char(src_[pos_])) {
            ++pos_;
        }
        if (start == pos_) {
            fail("expected a name");
        }
        return std::string(src_.substr(start, pos_ - start));
    }

    std::string decode_entities(std::string_view raw) const
    {
        std::string out;
        out.reserve(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            if (raw[i] != '&') {
                out.push_back(raw[i]);
                continue;
            }
            const auto semi = raw.find(';', i);
            if (semi == std::string_view::npos) {
                fail("unterminated entity");
            }
            const std::string_view ent = raw.substr(i + 1, semi - i - 1);
            if (ent == "lt") out.push_back('<');
            else if (ent == "gt") out.push_back('>');
            else if (ent == "amp") out.push_back('&');
            else if (ent == "quot") out.push_back('"');
            else if (ent == "apos") out.push_back('\'');
            else if (ent.size() > 1 && ent[0] == '#') {
                const bool hex = ent[1] == 'x' || ent[1] == 'X';
                const std::string digits(ent.substr(hex ? 2 : 1));
                if (digits.empty() || digits.size() > 8) {
                    fail("bad character reference");
                }
                char32_t cp = 0;
                for (char c : digits) {
                    int v = -1;
                    if (c >= '0' && c <= '9') v = c - '0';
                    else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
                    else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
                    if (v < 0) {
                        fail("bad character reference");
                    }
                    cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
                }
                append_utf8(out, xml_char_allowed(cp) ? cp : char32_t{0xfffd});
            } else {
                fail("unknown entity &" + std::string(ent) + ";");
            }
            i = semi;
        }
        return out;
    }

    XmlElement parse_element(int depth)
    {
        if (depth > max_depth) {
            fail("nesting too deep");
        }
        ++pos_; // '<'
        XmlElement el;
        el.name = parse_name();
        for (;;) {
            skip_ws();
            if (peek("/>")) {
                pos_ += 2;
                return el;
            }
            if (peek('>')) {
                ++pos_;
                break;
            }
            XmlAttribute attr;
            attr.name = parse_name();
            skip_ws();
            if (!peek('=')) {
                fail("expected '=' after attribute " + attr.name);
            }
            ++pos_;
            skip_ws();
            if (!peek('"') && !peek('\'')) {
                fail("expected quoted attribute value");
            }
            const char quote = src_[pos_++];
            const auto end = src_.find(quote, pos_);
            if (end == std::string_view::npos) {
                fail("unterminated attribute value");
            }
            attr.value = decode_entities(src_.substr(pos_, end - pos_));
            pos_ = end + 1;
            for (const auto& existing : el.attributes) {
                if (existing.name == attr.name) {
                    fail("duplicate attribute " + attr.name);
                }
            }
            el.attributes.push_back(std::move(attr));
        }

        std::string text;
        for (;;) {
            if (pos_ >= src_.size()) {
                fail("unterminated element " + el.name);
            }
            if (peek("</")) {
                pos_ += 2;
                const std::string closing = parse_name();
                if (closing != el.name) {
                    fail("mismatched closing tag " + closing);
                }
                skip_ws();
                if (!peek('>')) {
                    fail("expected '>'");
                }
                ++pos_;
                break;
            }
            if (peek("<!--")) {
                skip_past("-->");
            } else if (peek("<![CDATA[")) {
                pos_ += 9;
                const auto end = src_.find("]]>", pos_);
                if (end == std::string_view::npos) {
                    fail("unterminated CDATA");
                }
                text += src_.substr(pos_, end - pos_);
                pos_ = end + 3;
            } else if (peek("<?")) {
                skip_past("?>");
            } else if (peek('<')) {
                el.children.push_back(parse_element(depth + 1));
            } else {
                const auto next = src_.find('<', pos_);
                const auto stop = next == std::string_view::npos ? src_.size() : next;
                text += decode_entities(src_.substr(pos_, stop - pos_));
                pos_ = stop;
            }
        }
        el.text = trim(text);
        return el;
    }

    static std::string trim(std::string_view s)
    {
        const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; };
        std::size_t b = 0;
        std::size_t e = s.size();
        while (b < e && is_ws(s[b])) ++b;
        while (e > b && is_ws(s[e - 1])) --e;
        return std::string(s.substr(b, e - b));
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Serializes with a UTF-8 declaration, two-space indentation, LF endings.
inline std::string to_xml_text(const XmlElement& root)
{
    std::string out = "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n";
    detail::write_element(out, root, 0);
    return out;
}

/// Element text is whitespace-trimmed; comments and processing
/// instructions are dropped.
inline XmlElement parse_xml_text(std::string_view text)
{
    return detail::XmlTextParser(text).parse_document();
}

} // namespace apkvis
