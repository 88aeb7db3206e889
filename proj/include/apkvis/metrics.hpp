#pragma once

// Binary classification metrics with Malware as the positive class.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "apkvis/error.hpp"
#include "apkvis/label.hpp"

namespace apkvis {

struct PredictionRecord {
    std::string sample_id;
    Label true_label = Label::Benign;
    Label predicted_label = Label::Benign;
    std::optional<double> score_malware;

    friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t support = 0;
};

struct AveragedMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct MetricsReport {
    std::size_t n = 0;
    double accuracy = 0;
    ClassMetrics benign;
    ClassMetrics malware;
    AveragedMetrics macro;
    AveragedMetrics weighted;
    std::optional<double> roc_auc;
    ConfusionMatrix confusion;
    /// Set when some precision or recall had a zero denominator (reported as 0).
    bool zero_division = false;

    const ClassMetrics& for_class(Label l) const noexcept { return l == Label::Malware ? malware : benign; }
};

inline ConfusionMatrix confusion(std::span<const PredictionRecord> predictions)
{
    if (predictions.empty()) {
        throw Error(ErrorCode::EmptyPredictions, "no predictions");
    }
    ConfusionMatrix cm;
    for (const auto& p : predictions) {
        const bool actual = p.true_label == Label::Malware;
        const bool predicted = p.predicted_label == Label::Malware;
        if (actual && predicted) ++cm.tp;
        else if (!actual && predicted) ++cm.fp;
        else if (!actual && !predicted) ++cm.tn;
        else ++cm.fn;
    }
    return cm;
}

/// Mann-Whitney form: pairs (positive, negative) with the positive scored
/// higher count 1, ties count 1/2; computed in O(n log n) via mid-ranks.
inline double roc_auc(std::span<const PredictionRecord> predictions)
{
    std::vector<std::pair<double, bool>> scored;
    scored.reserve(predictions.size());
    for (const auto& p : predictions) {
        if (!p.score_malware) {
            throw Error(ErrorCode::MissingScores, "prediction " + p.sample_id + " has no score");
        }
        if (!std::isfinite(*p.score_malware)) {
            throw Error(ErrorCode::MissingScores, "prediction " + p.sample_id + " has a non-finite score");
        }
        scored.emplace_back(*p.score_malware, p.true_label == Label::Malware);
    }
    const auto n_pos = static_cast<std::size_t>(
        std::count_if(scored.begin(), scored.end(), [](const auto& s) { return s.second; }));
    const std::size_t n_neg = scored.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw Error(ErrorCode::SingleClassOnly, "AUC needs both classes");
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    // Rank sums are kept doubled so mid-ranks stay integral.
    std::uint64_t twice_rank_sum = 0;
    std::size_t i = 0;
    while (i < scored.size()) {
        std::size_t j = i;
        std::size_t pos_in_group = 0;
        while (j < scored.size() && scored[j].first == scored[i].first) {
            pos_in_group += scored[j].second ? 1 : 0;
            ++j;
        }
        // ranks i+1..j, doubled mid-rank = i + 1 + j
        twice_rank_sum += static_cast<std::uint64_t>(pos_in_group) * (i + 1 + j);
        i = j;
    }
    const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace detail {

inline double safe_ratio(std::size_t num, std::size_t den, bool& zero_division)
{
    if (den == 0) {
        zero_division = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

inline double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

} // namespace detail

/// 0/0 precision or recall is reported as 0 and flags zero_division. The
/// AUC is filled when every record has a score and both classes occur.
inline MetricsReport report(std::span<const PredictionRecord> predictions)
{
    MetricsReport r;
    r.confusion = confusion(predictions);
    const ConfusionMatrix& cm = r.confusion;
    r.n = cm.total();
    r.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(r.n);

    r.malware.precision = detail::safe_ratio(cm.tp, cm.tp + cm.fp, r.zero_division);
    r.malware.recall = detail::safe_ratio(cm.tp, cm.tp + cm.fn, r.zero_division);
    r.malware.f1 = detail::harmonic(r.malware.precision, r.malware.recall);
    r.malware.support = cm.tp + cm.fn;

    // Benign as the positive class: its true positives are tn.
    r.benign.precision = detail::safe_ratio(cm.tn, cm.tn + cm.fn, r.zero_division);
    r.benign.recall = detail::safe_ratio(cm.tn, cm.tn + cm.fp, r.zero_division);
    r.benign.f1 = detail::harmonic(r.benign.precision, r.benign.recall);
    r.benign.support = cm.tn + cm.fp;

    r.macro.precision = (r.benign.precision + r.malware.precision) / 2.0;
    r.macro.recall = (r.benign.recall + r.malware.recall) / 2.0;
    r.macro.f1 = (r.benign.f1 + r.malware.f1) / 2.0;

    const double wb = static_cast<double>(r.benign.support) / static_cast<double>(r.n);
    const double wm = static_cast<double>(r.malware.support) / static_cast<double>(r.n);
    r.weighted.precision = wb * r.benign.precision + wm * r.malware.precision;
    r.weighted.recall = wb * r.benign.recall + wm * r.malware.recall;
    r.weighted.f1 = wb * r.benign.f1 + wm * r.malware.f1;

    const bool all_scored = std::all_of(predictions.begin(), predictions.end(),
                                        [](const PredictionRecord& p) { return p.score_malware.has_value(); });
    if (all_scored && r.benign.support > 0 && r.malware.support > 0) {
        r.roc_auc = roc_auc(predictions);
    }
    return r;
}

inline double round_to(double v, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

/// Machine-readable report; values rounded to `decimals`.
inline nlohmann::ordered_json to_json(const MetricsReport& r, int decimals = 4)
{
    auto rd = [&](double v) { return round_to(v, decimals); };
    auto cls = [&](const ClassMetrics& c) {
        return nlohmann::ordered_json{{"precision", rd(c.precision)},
                                      {"recall", rd(c.recall)},
                                      {"f1", rd(c.f1)},
                                      {"support", c.support}};
    };
    auto avg = [&](const AveragedMetrics& a) {
        return nlohmann::ordered_json{{"precision", rd(a.precision)}, {"recall", rd(a.recall)}, {"f1", rd(a.f1)}};
    };
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["accuracy"] = rd(r.accuracy);
    j["per_class"] = {{"benign", cls(r.benign)}, {"malware", cls(r.malware)}};
    j["macro"] = avg(r.macro);
    j["weighted"] = avg(r.weighted);
    j["roc_auc"] = r.roc_auc ? nlohmann::ordered_json(rd(*r.roc_auc)) : nlohmann::ordered_json(nullptr);
    j["confusion"] = {{"tp", r.confusion.tp}, {"fp", r.confusion.fp}, {"tn", r.confusion.tn}, {"fn", r.confusion.fn}};
    j["zero_division"] = r.zero_division;
    return j;
}

/// Human-readable table with the columns Accuracy, Precision, Recall,
/// F1-Score and ROC AUC.
inline std::string format_table(const MetricsReport& r, int decimals = 4)
{
    const int w = 10;
    auto num = [&](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%*.*f", w, decimals, v);
        return std::string(buf);
    };
    auto dash = [&] {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%*s", w, "-");
        return std::string(buf);
    };
    auto header_cell = [&](const char* s) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%*s", w, s);
        return std::string(buf);
    };
    auto label = [](const char* s) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%-14s", s);
        return std::string(buf);
    };
    const std::string auc = r.roc_auc ? num(*r.roc_auc) : header_cell("n/a");
    std::ostringstream out;
    out << label("") << header_cell("Accuracy") << header_cell("Precision") << header_cell("Recall")
        << header_cell("F1-Score") << header_cell("ROC AUC") << header_cell("Support") << '\n';
    auto class_row = [&](const char* name, const ClassMetrics& c) {
        out << label(name) << dash() << num(c.precision) << num(c.recall) << num(c.f1) << dash()
            << header_cell(std::to_string(c.support).c_str()) << '\n';
    };
    class_row("Benign", r.benign);
    class_row("Malware", r.malware);
    out << label("macro avg") << num(r.accuracy) << num(r.macro.precision) << num(r.macro.recall)
        << num(r.macro.f1) << auc << header_cell(std::to_string(r.n).c_str()) << '\n';
    out << label("weighted avg") << num(r.accuracy) << num(r.weighted.precision) << num(r.weighted.recall)
        << num(r.weighted.f1) << auc << header_cell(std::to_string(r.n).c_str()) << '\n';
    if (r.zero_division) {
        out << "note: zero-division in precision/recall reported as 0\n";
    }
    return out.str();
}

/// CSV with columns sample_id,true,pred,score. Header optional; score may
/// be empty.
inline std::vector<PredictionRecord> parse_predictions_csv(std::string_view text)
{
    std::vector<PredictionRecord> out;
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
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            cols.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols.size() < 3 || cols.size() > 4 || cols[0].empty()) {
            throw Error(ErrorCode::MalformedPredictions, "line " + std::to_string(lineno) + ": expected sample_id,true,pred,score");
        }
        const auto truth = parse_label(cols[1]);
        const auto pred = parse_label(cols[2]);
        if (!truth || !pred) {
            throw Error(ErrorCode::MalformedPredictions, "line " + std::to_string(lineno) + ": bad label");
        }
        PredictionRecord rec{cols[0], *truth, *pred, std::nullopt};
        if (cols.size() == 4 && !cols[3].empty()) {
            std::size_t used = 0;
            double score = 0;
            try {
                score = std::stod(cols[3], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cols[3].size() || !(score >= 0.0 && score <= 1.0)) {
                throw Error(ErrorCode::MalformedPredictions, "line " + std::to_string(lineno) + ": score must be in [0,1]");
            }
            rec.score_malware = score;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::string format_predictions_csv(std::span<const PredictionRecord> predictions)
{
    std::string out = "sample_id,true,pred,score\n";
    for (const auto& p : predictions) {
        out += p.sample_id;
        out += ',';
        out += to_string(p.true_label);
        out += ',';
        out += to_string(p.predicted_label);
        out += ',';
        if (p.score_malware) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", *p.score_malware);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace apkvis
