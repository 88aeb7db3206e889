#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>

namespace apkvis {

/// Binary class; Malware is the positive class everywhere.
enum class Label { Benign, Malware };

constexpr std::string_view to_string(Label l) noexcept { return l == Label::Malware ? "malware" : "benign"; }

inline std::optional<Label> parse_label(std::string_view s)
{
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "benign" || lower == "benignware" || lower == "0") return Label::Benign;
    if (lower == "malware" || lower == "malicious" || lower == "1") return Label::Malware;
    return std::nullopt;
}

} // namespace apkvis
