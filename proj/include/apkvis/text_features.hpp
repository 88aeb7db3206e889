#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "apkvis/apk_container.hpp"
#include "apkvis/axml.hpp"
#include "apkvis/label.hpp"

namespace apkvis {

/// Instruction text sent ahead of the evidence for each label hypothesis.
inline constexpr std::string_view benign_prompt_template =
    "Examine the provided text extracts from the APK file. In a single paragraph, identify and "
    "summarize the key features that indicate the APK is benignware. Focus on necessary permissions, "
    "strings related to app functionality, and the absence of malicious indicators. Provide a concise "
    "and informative summary, prioritizing the most important and relevant features.";

inline constexpr std::string_view malware_prompt_template =
    "Examine the provided text extracts from the APK file. In a single paragraph, identify and "
    "summarize the key features that indicate the APK is malware. Focus on dangerous permissions "
    "(e.g., 'SEND_SMS', 'READ_CONTACTS'), suspicious strings (URLs, IP addresses, C&C related terms), "
    "and indications of malicious behavior (data theft, device manipulation).";

constexpr std::string_view prompt_template(Label hypothesis) noexcept
{
    return hypothesis == Label::Malware ? malware_prompt_template : benign_prompt_template;
}

struct EvidenceConfig {
    std::size_t min_string_length = 4;
    /// Short names; a permission matches as "android.permission.<NAME>" or "<NAME>".
    std::vector<std::string> dangerous_permissions = {
        "SEND_SMS",      "READ_CONTACTS",         "RECEIVE_SMS",      "READ_SMS",
        "CALL_PHONE",    "RECORD_AUDIO",          "ACCESS_FINE_LOCATION", "WRITE_CONTACTS",
        "READ_PHONE_STATE", "SYSTEM_ALERT_WINDOW",
    };
};

struct TextEvidence {
    std::vector<std::string> permissions;
    std::vector<std::string> printable_strings;
    std::vector<std::string> urls;
    std::vector<std::string> ip_addresses;
    std::vector<std::string> dangerous_permission_hits;
    std::map<std::string, std::size_t> source_entry_counts;
};

namespace detail {

constexpr bool is_printable_ascii(std::uint8_t b) noexcept { return b >= 0x20 && b <= 0x7e; }

/// Maximal runs of printable ASCII of at least `min_len` bytes.
inline std::vector<std::string> printable_runs(ByteView data, std::size_t min_len)
{
    std::vector<std::string> out;
    min_len = std::max<std::size_t>(min_len, 1);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= data.size(); ++i) {
        if (i < data.size() && is_printable_ascii(data[i])) {
            continue;
        }
        if (i - start >= min_len) {
            out.emplace_back(reinterpret_cast<const char*>(data.data() + start), i - start);
        }
        start = i + 1;
    }
    return out;
}

inline bool url_char(char c) noexcept
{
    return c > 0x20 && c < 0x7f && c != '"' && c != '\'' && c != '<' && c != '>' && c != '`' && c != '\\';
}

inline void scan_urls(std::string_view s, std::vector<std::string>& out)
{
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto http = s.find("http", pos);
        if (http == std::string_view::npos) {
            return;
        }
        std::size_t after = http + 4;
        if (after < s.size() && s[after] == 's') {
            ++after;
        }
        if (s.substr(after).starts_with("://")) {
            std::size_t end = after + 3;
            while (end < s.size() && url_char(s[end])) {
                ++end;
            }
            if (end > after + 3) {
                out.emplace_back(s.substr(http, end - http));
                pos = end;
                continue;
            }
        }
        pos = http + 4;
    }
}

inline bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }

/// Dotted quads with 1-3 digit octets in 0..255, not embedded in longer
/// digit/dot runs.
inline void scan_ipv4(std::string_view s, std::vector<std::string>& out)
{
    std::size_t i = 0;
    while (i < s.size()) {
        if (!is_digit(s[i]) || (i > 0 && (is_digit(s[i - 1]) || s[i - 1] == '.'))) {
            ++i;
            continue;
        }
        std::size_t p = i;
        bool ok = true;
        for (int octet = 0; octet < 4 && ok; ++octet) {
            const std::size_t begin = p;
            unsigned value = 0;
            while (p < s.size() && is_digit(s[p]) && p - begin < 4) {
                value = value * 10 + static_cast<unsigned>(s[p] - '0');
                ++p;
            }
            const std::size_t len = p - begin;
            ok = len >= 1 && len <= 3 && value <= 255;
            if (ok && octet < 3) {
                ok = p < s.size() && s[p] == '.';
                ++p;
            }
        }
        if (ok && (p >= s.size() || (!is_digit(s[p]) && !(s[p] == '.' && p + 1 < s.size() && is_digit(s[p + 1]))))) {
            out.emplace_back(s.substr(i, p - i));
            i = p;
            continue;
        }
        // Skip the rest of this digit run.
        while (i < s.size() && is_digit(s[i])) {
            ++i;
        }
    }
}

inline bool is_text_source_entry(std::string_view name)
{
    return dex_ordinal(name).has_value() || name == "resources.arsc" || name.starts_with("res/") ||
           name.starts_with("assets/");
}

inline void dedup_in_place(std::vector<std::string>& v)
{
    std::unordered_set<std::string> seen;
    std::vector<std::string> kept;
    kept.reserve(v.size());
    for (auto& s : v) {
        if (seen.insert(s).second) {
            kept.push_back(std::move(s));
        }
    }
    v = std::move(kept);
}

} // namespace detail

inline bool is_dangerous_permission(std::string_view permission, const EvidenceConfig& config)
{
    constexpr std::string_view prefix = "android.permission.";
    const std::string_view shortname =
        permission.starts_with(prefix) ? permission.substr(prefix.size()) : permission;
    return std::any_of(config.dangerous_permissions.begin(), config.dangerous_permissions.end(),
                       [&](const std::string& d) { return d == shortname; });
}

/// Strings come from dex, resources.arsc, res/ and assets/ entries in
/// archive order; all lists are deduplicated keeping first occurrence.
inline TextEvidence extract_evidence(const ApkArchive& archive, const ManifestModel& manifest,
                                     const EvidenceConfig& config = {})
{
    TextEvidence ev;
    ev.permissions = manifest.permissions;
    for (const auto& p : ev.permissions) {
        if (is_dangerous_permission(p, config)) {
            ev.dangerous_permission_hits.push_back(p);
        }
    }
    for (const auto& entry : archive.entries()) {
        if (!detail::is_text_source_entry(entry.name)) {
            continue;
        }
        const Bytes data = read_entry(archive, entry.name);
        auto runs = detail::printable_runs(data, config.min_string_length);
        ev.source_entry_counts[entry.name] = runs.size();
        for (auto& r : runs) {
            ev.printable_strings.push_back(std::move(r));
        }
    }
    detail::dedup_in_place(ev.printable_strings);
    for (const auto& s : ev.printable_strings) {
        detail::scan_urls(s, ev.urls);
        detail::scan_ipv4(s, ev.ip_addresses);
    }
    detail::dedup_in_place(ev.urls);
    detail::dedup_in_place(ev.ip_addresses);
    return ev;
}

inline nlohmann::ordered_json to_json(const TextEvidence& ev)
{
    nlohmann::ordered_json j;
    j["permissions"] = ev.permissions;
    j["dangerous_permission_hits"] = ev.dangerous_permission_hits;
    j["urls"] = ev.urls;
    j["ip_addresses"] = ev.ip_addresses;
    j["source_entry_counts"] = ev.source_entry_counts;
    j["printable_strings"] = ev.printable_strings;
    return j;
}

/// Counts whitespace-separated tokens; stands in for a model tokenizer.
inline std::size_t approx_token_count(std::string_view text)
{
    std::size_t n = 0;
    bool in_token = false;
    for (char c : text) {
        const bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
        if (!ws && !in_token) {
            ++n;
        }
        in_token = !ws;
    }
    return n;
}

inline constexpr std::string_view evidence_delimiter = "\n\n### APK TEXT EXTRACTS ###\n";
inline constexpr std::size_t default_max_input_tokens = 3500;

struct PromptInstance {
    Label label_hypothesis = Label::Benign;
    std::string_view template_text;
    std::string evidence_digest;
    std::size_t max_input_tokens = default_max_input_tokens;
    /// Evidence items dropped to respect the token bound.
    std::size_t dropped_items = 0;

    std::string text() const
    {
        return std::string(template_text) + std::string(evidence_delimiter) + evidence_digest;
    }
};

namespace detail {

enum class EvidenceSection { Dangerous, Urls, Ips, Permissions, Strings };

constexpr std::string_view section_title(EvidenceSection s) noexcept
{
    switch (s) {
    case EvidenceSection::Dangerous: return "Dangerous permissions:";
    case EvidenceSection::Urls: return "URLs:";
    case EvidenceSection::Ips: return "IP addresses:";
    case EvidenceSection::Permissions: return "Permissions:";
    case EvidenceSection::Strings: return "Strings:";
    }
    return "";
}

struct EvidenceItem {
    EvidenceSection section;
    std::string_view value;
};

/// Items in keep-priority order: dangerous hits, URLs and IPs, remaining
/// permissions, then other strings.
inline std::vector<EvidenceItem> prioritized_items(const TextEvidence& ev)
{
    std::vector<EvidenceItem> items;
    for (const auto& s : ev.dangerous_permission_hits) items.push_back({EvidenceSection::Dangerous, s});
    for (const auto& s : ev.urls) items.push_back({EvidenceSection::Urls, s});
    for (const auto& s : ev.ip_addresses) items.push_back({EvidenceSection::Ips, s});
    const std::unordered_set<std::string_view> dangerous(ev.dangerous_permission_hits.begin(),
                                                         ev.dangerous_permission_hits.end());
    for (const auto& s : ev.permissions) {
        if (!dangerous.contains(s)) items.push_back({EvidenceSection::Permissions, s});
    }
    const std::unordered_set<std::string_view> urls_ips = [&] {
        std::unordered_set<std::string_view> u(ev.urls.begin(), ev.urls.end());
        u.insert(ev.ip_addresses.begin(), ev.ip_addresses.end());
        return u;
    }();
    for (const auto& s : ev.printable_strings) {
        if (!urls_ips.contains(s)) items.push_back({EvidenceSection::Strings, s});
    }
    return items;
}

inline std::string render_digest(std::span<const EvidenceItem> items)
{
    std::string out;
    for (auto section : {EvidenceSection::Dangerous, EvidenceSection::Urls, EvidenceSection::Ips,
                         EvidenceSection::Permissions, EvidenceSection::Strings}) {
        bool header = false;
        for (const auto& item : items) {
            if (item.section != section) {
                continue;
            }
            if (!header) {
                out += section_title(section);
                out += '\n';
                header = true;
            }
            out += "- ";
            out += item.value;
            out += '\n';
        }
    }
    return out;
}

} // namespace detail

/// Template text is never cut; evidence is kept as the longest prefix of
/// the priority order that fits within `max_input_tokens`.
inline PromptInstance build_prompt(const TextEvidence& evidence, Label hypothesis,
                                   std::size_t max_input_tokens = default_max_input_tokens)
{
    PromptInstance prompt;
    prompt.label_hypothesis = hypothesis;
    prompt.template_text = prompt_template(hypothesis);
    prompt.max_input_tokens = max_input_tokens;

    const auto items = detail::prioritized_items(evidence);
    const std::size_t fixed = approx_token_count(prompt.template_text) + approx_token_count(evidence_delimiter);
    auto fits = [&](std::size_t k) {
        const std::string digest = detail::render_digest(std::span(items.data(), k));
        return fixed + approx_token_count(digest) <= max_input_tokens;
    };
    // Token count grows monotonically with the prefix length.
    std::size_t lo = 0;
    std::size_t hi = items.size();
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        if (fits(mid)) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    prompt.evidence_digest = detail::render_digest(std::span(items.data(), lo));
    prompt.dropped_items = items.size() - lo;
    return prompt;
}

} // namespace apkvis
