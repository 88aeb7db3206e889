#pragma once

// Labeled sample index and its reproducible, stratified train/val/test split.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apkvis/byte_image.hpp"
#include "apkvis/error.hpp"
#include "apkvis/png_io.hpp"
#include "apkvis/text_features.hpp"

namespace apkvis {

enum class Split { Train, Val, Test };

constexpr std::string_view to_string(Split s) noexcept
{
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    }
    return "train";
}

inline std::optional<Split> parse_split(std::string_view s)
{
    if (s == "train") return Split::Train;
    if (s == "val" || s == "validation") return Split::Val;
    if (s == "test") return Split::Test;
    return std::nullopt;
}

/// splitmix64 (Steele, Lea, Flood 2014): state += 0x9e3779b97f4a7c15, then
/// the standard xor-shift-multiply finalizer.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, bound) by rejection: draws below (2^64 - bound) % bound
    /// are discarded, then the draw is reduced modulo bound.
    std::uint64_t below(std::uint64_t bound) noexcept
    {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = next();
            if (r >= threshold) {
                return r % bound;
            }
        }
    }

private:
    std::uint64_t state_;
};

/// Fisher-Yates, i from n-1 down to 1, swapping i with below(i + 1).
template <typename T>
void fisher_yates(std::vector<T>& items, SplitMix64& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;

    std::array<double, 3> as_array() const noexcept { return {train, val, test}; }

    void validate() const
    {
        for (double f : as_array()) {
            if (!(f >= 0.0 && f <= 1.0)) {
                throw Error(ErrorCode::InvalidArgument, "split fractions must lie in [0, 1]");
            }
        }
        if (std::abs(train + val + test - 1.0) > 1e-9) {
            throw Error(ErrorCode::InvalidArgument, "split fractions must sum to 1");
        }
    }

    friend bool operator==(const SplitFractions&, const SplitFractions&) = default;
};

/// Largest-remainder apportionment of n items; ties go to the earlier split.
inline std::array<std::size_t, 3> apportion(std::size_t n, const SplitFractions& fractions)
{
    const auto f = fractions.as_array();
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        const double quota = static_cast<double>(n) * f[k];
        const double floored = std::floor(quota + 1e-9);
        counts[k] = static_cast<std::size_t>(floored);
        remainder[k] = quota - floored;
        assigned += counts[k];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
    for (std::size_t i = 0; assigned < n; i = (i + 1) % 3) {
        ++counts[order[i]];
        ++assigned;
    }
    while (assigned > n) {
        // Only reachable through rounding slack; trim the largest bucket.
        auto it = std::max_element(counts.begin(), counts.end());
        --*it;
        --assigned;
    }
    return counts;
}

struct DatasetRecord {
    std::string sample_id;
    std::string image_path;
    std::optional<std::string> text_path;
    Label label = Label::Benign;
    std::optional<std::string> family;
    Split split = Split::Train;
    ImageSpec image_spec;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct SplitCounts {
    // [label][split]
    std::array<std::array<std::size_t, 3>, 2> by_label{};

    std::size_t get(Label l, Split s) const noexcept
    {
        return by_label[static_cast<std::size_t>(l)][static_cast<std::size_t>(s)];
    }
    std::size_t split_total(Split s) const noexcept { return get(Label::Benign, s) + get(Label::Malware, s); }

    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

struct DatasetManifest {
    std::vector<DatasetRecord> records; // sorted by sample_id
    std::uint64_t seed = 0;
    SplitFractions split_fractions;
    std::string created_at;
    SplitCounts counts;

    void recount()
    {
        counts = {};
        for (const auto& r : records) {
            ++counts.by_label[static_cast<std::size_t>(r.label)][static_cast<std::size_t>(r.split)];
        }
    }
};

inline std::string utc_timestamp_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Within each label (benign first, then malware) records are ordered by
/// sample_id, shuffled by one SplitMix64(seed) stream, then cut into
/// train/val/test blocks sized by apportion().
inline DatasetManifest assign_splits(DatasetManifest manifest, std::uint64_t seed,
                                     const SplitFractions& fractions = {})
{
    fractions.validate();
    if (manifest.records.empty()) {
        throw Error(ErrorCode::EmptyManifest, "nothing to split");
    }
    SplitMix64 rng(seed);
    for (Label label : {Label::Benign, Label::Malware}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < manifest.records.size(); ++i) {
            if (manifest.records[i].label == label) {
                members.push_back(i);
            }
        }
        std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
            return manifest.records[a].sample_id < manifest.records[b].sample_id;
        });
        fisher_yates(members, rng);
        const auto counts = apportion(members.size(), fractions);
        std::size_t pos = 0;
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t c = 0; c < counts[k]; ++c) {
                manifest.records[members[pos++]].split = static_cast<Split>(k);
            }
        }
    }
    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) { return a.sample_id < b.sample_id; });
    manifest.seed = seed;
    manifest.split_fractions = fractions;
    manifest.recount();
    return manifest;
}

struct LabelEntry {
    Label label;
    std::optional<std::string> family;
};

/// `sample_id,label[,family]` lines; an optional header line starting with
/// "sample_id" is skipped.
inline std::map<std::string, LabelEntry> parse_labels_csv(std::string_view text)
{
    std::map<std::string, LabelEntry> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || (lineno == 1 && line.starts_with("sample_id"))) {
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) {
            cols.push_back(col);
        }
        if (cols.size() < 2 || cols.size() > 3 || cols[0].empty()) {
            throw Error(ErrorCode::InvalidArgument, "labels line " + std::to_string(lineno) + ": expected sample_id,label");
        }
        const auto label = parse_label(cols[1]);
        if (!label) {
            throw Error(ErrorCode::InvalidArgument, "labels line " + std::to_string(lineno) + ": unknown label '" + cols[1] + "'");
        }
        LabelEntry entry{*label, std::nullopt};
        if (cols.size() == 3 && !cols[2].empty()) {
            entry.family = cols[2];
        }
        if (!out.emplace(cols[0], entry).second) {
            throw Error(ErrorCode::DuplicateSampleId, cols[0]);
        }
    }
    return out;
}

/// Image file name for a sample: `<sample_id>_<mode>_<res>.png`.
inline std::string image_file_name(std::string_view sample_id, const ImageSpec& spec)
{
    return std::string(sample_id) + "_" + spec.tag() + ".png";
}

struct BuildOptions {
    /// Skip labeled samples that have no image instead of failing.
    bool allow_missing_images = false;
    /// Fixed value for reproducible output; empty means "now".
    std::string created_at;
};

/// Pairs `<id>_<spec>.png` images with optional `<id>_<spec>.txt`
/// annotations and labels, then assigns splits.
inline DatasetManifest build_manifest(const std::filesystem::path& image_dir, const std::filesystem::path& text_dir,
                                      const std::map<std::string, LabelEntry>& labels, const ImageSpec& spec,
                                      std::uint64_t seed, const SplitFractions& fractions = {},
                                      const BuildOptions& options = {})
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(image_dir, ec)) {
        throw Error(ErrorCode::IoError, "image directory not found: " + image_dir.string());
    }
    const std::string suffix = "_" + spec.tag() + ".png";
    std::map<std::string, fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const std::string name = entry.path().filename().string();
        if (name.size() <= suffix.size() || !name.ends_with(suffix)) {
            continue;
        }
        const std::string id = name.substr(0, name.size() - suffix.size());
        if (!images.emplace(id, entry.path()).second) {
            throw Error(ErrorCode::DuplicateSampleId, id);
        }
    }

    DatasetManifest manifest;
    for (const auto& [id, path] : images) {
        auto label = labels.find(id);
        if (label == labels.end()) {
            throw Error(ErrorCode::UnlabeledSample, path.string());
        }
        const DecodedPng png = read_png(path);
        if (png.width != spec.side() || png.height != spec.side() || png.channels != spec.channel_count()) {
            throw Error(ErrorCode::InvalidImage, path.string() + " does not decode to " + spec.tag());
        }
        DatasetRecord rec;
        rec.sample_id = id;
        rec.image_path = path.string();
        rec.label = label->second.label;
        rec.family = label->second.family;
        rec.image_spec = spec;
        if (!text_dir.empty()) {
            const fs::path text = text_dir / (path.stem().string() + ".txt");
            if (fs::is_regular_file(text, ec) && fs::file_size(text, ec) > 0) {
                rec.text_path = text.string();
            }
        }
        manifest.records.push_back(std::move(rec));
    }
    if (!options.allow_missing_images) {
        for (const auto& [id, entry] : labels) {
            if (!images.contains(id)) {
                throw Error(ErrorCode::MissingImage, id + " has a label but no " + spec.tag() + " image");
            }
        }
    }
    manifest.created_at = options.created_at.empty() ? utc_timestamp_now() : options.created_at;
    return assign_splits(std::move(manifest), seed, fractions);
}

// Manifest file: JSON Lines, UTF-8. Line 1 is a header object with
// "kind":"manifest"; each following line is a "kind":"record" object.
// Records are sorted by sample_id.

inline nlohmann::ordered_json to_json(const ImageSpec& spec)
{
    return {{"color_mode", to_string(spec.color_mode)},
            {"resolution", spec.side()},
            {"resample", to_string(spec.resample)}};
}

inline nlohmann::ordered_json to_json(const DatasetRecord& r)
{
    nlohmann::ordered_json j;
    j["kind"] = "record";
    j["sample_id"] = r.sample_id;
    j["image_path"] = r.image_path;
    j["text_path"] = r.text_path ? nlohmann::ordered_json(*r.text_path) : nlohmann::ordered_json(nullptr);
    j["label"] = to_string(r.label);
    j["family"] = r.family ? nlohmann::ordered_json(*r.family) : nlohmann::ordered_json(nullptr);
    j["split"] = to_string(r.split);
    j["image_spec"] = to_json(r.image_spec);
    return j;
}

inline std::string serialize_manifest(const DatasetManifest& m)
{
    nlohmann::ordered_json header;
    header["kind"] = "manifest";
    header["version"] = 1;
    header["seed"] = m.seed;
    header["split_fractions"] = {{"train", m.split_fractions.train},
                                 {"val", m.split_fractions.val},
                                 {"test", m.split_fractions.test}};
    header["created_at"] = m.created_at;
    nlohmann::ordered_json counts;
    for (Label l : {Label::Benign, Label::Malware}) {
        for (Split s : {Split::Train, Split::Val, Split::Test}) {
            counts[std::string(to_string(l))][std::string(to_string(s))] = m.counts.get(l, s);
        }
    }
    header["counts"] = counts;
    header["records"] = m.records.size();

    std::string out = header.dump() + "\n";
    for (const auto& r : m.records) {
        out += to_json(r).dump() + "\n";
    }
    return out;
}

namespace detail {

inline ImageSpec image_spec_from_json(const nlohmann::json& j)
{
    const auto mode = parse_color_mode(j.at("color_mode").get<std::string>());
    const auto res = parse_resolution(std::to_string(j.at("resolution").get<int>()));
    const auto resample = parse_resample(j.value("resample", std::string("nearest")));
    if (!mode || !res || !resample) {
        throw Error(ErrorCode::MalformedManifest, "bad image_spec " + j.dump());
    }
    return {*mode, *res, *resample};
}

} // namespace detail

inline DatasetManifest parse_manifest(std::string_view text)
{
    DatasetManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    try {
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) {
                continue;
            }
            const auto j = nlohmann::json::parse(line);
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "manifest") {
                if (have_header) {
                    throw Error(ErrorCode::MalformedManifest, "second header line");
                }
                have_header = true;
                if (j.at("version").get<int>() != 1) {
                    throw Error(ErrorCode::MalformedManifest, "unsupported manifest version " + j["version"].dump());
                }
                m.seed = j.at("seed").get<std::uint64_t>();
                const auto& f = j.at("split_fractions");
                m.split_fractions = {f.at("train").get<double>(), f.at("val").get<double>(), f.at("test").get<double>()};
                m.created_at = j.value("created_at", std::string{});
            } else if (kind == "record") {
                DatasetRecord r;
                r.sample_id = j.at("sample_id").get<std::string>();
                r.image_path = j.at("image_path").get<std::string>();
                if (j.contains("text_path") && !j["text_path"].is_null()) {
                    r.text_path = j["text_path"].get<std::string>();
                }
                const auto label = parse_label(j.at("label").get<std::string>());
                const auto split = parse_split(j.at("split").get<std::string>());
                if (!label || !split) {
                    throw Error(ErrorCode::MalformedManifest, "bad label or split on line " + std::to_string(lineno));
                }
                r.label = *label;
                r.split = *split;
                if (j.contains("family") && !j["family"].is_null()) {
                    r.family = j["family"].get<std::string>();
                }
                r.image_spec = detail::image_spec_from_json(j.at("image_spec"));
                m.records.push_back(std::move(r));
            } else {
                throw Error(ErrorCode::MalformedManifest, "unknown kind '" + kind + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedManifest, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
        throw Error(ErrorCode::MalformedManifest, "missing header line");
    }
    std::set<std::string> ids;
    for (const auto& r : m.records) {
        if (!ids.insert(r.sample_id).second) {
            throw Error(ErrorCode::DuplicateSampleId, r.sample_id);
        }
    }
    std::sort(m.records.begin(), m.records.end(),
              [](const DatasetRecord& a, const DatasetRecord& b) { return a.sample_id < b.sample_id; });
    m.recount();
    return m;
}

} // namespace apkvis
