// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <set>

#include "apkvis/apkvis.hpp"
#include "support/corpus.hpp"
#include "support/xml_oracle.hpp"

using namespace apkvis;
using namespace testsupport;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double budget_seconds; // <= 0: no runtime bound
    std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome degenerate_predictor_metrics()
{
    std::vector<PredictionRecord> preds;
    for (int i = 0; i < 34; ++i) {
        preds.push_back({"s" + std::to_string(i), i < 17 ? Label::Benign : Label::Malware, Label::Benign, 0.1});
    }
    const MetricsReport r = report(parse_predictions_csv(format_predictions_csv(preds)));
    const struct {
        const char* what;
        double got;
        double want;
    } rows[] = {
        {"accuracy", r.accuracy, 0.50},
        {"benign precision", r.benign.precision, 0.50},
        {"benign recall", r.benign.recall, 1.00},
        {"benign f1", r.benign.f1, 0.67},
        {"malware precision", r.malware.precision, 0.00},
        {"malware recall", r.malware.recall, 0.00},
        {"malware f1", r.malware.f1, 0.00},
        {"macro precision", r.macro.precision, 0.25},
        {"macro recall", r.macro.recall, 0.50},
        {"macro f1", r.macro.f1, 0.33},
    };
    for (const auto& row : rows) {
        if (std::abs(round_to(row.got, 2) - row.want) > 0.005) {
            return {false, fmt("%s = %.4f, expected %.2f", row.what, row.got, row.want)};
        }
    }
    return {true, "acc 0.50, benign 0.50/1.00/0.67, malware 0.00/0.00/0.00, macro 0.25/0.50/0.33"};
}

double brute_force_auc(const std::vector<PredictionRecord>& p)
{
    double wins = 0, pairs = 0;
    for (const auto& a : p) {
        if (a.true_label != Label::Malware) continue;
        for (const auto& b : p) {
            if (b.true_label != Label::Benign) continue;
            pairs += 1;
            wins += *a.score_malware > *b.score_malware ? 1.0 : *a.score_malware == *b.score_malware ? 0.5 : 0.0;
        }
    }
    return wins / pairs;
}

Outcome auc_oracle()
{
    std::mt19937_64 rng(610);
    double worst = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng() % 199;
        std::vector<PredictionRecord> p;
        for (std::size_t i = 0; i < n; ++i) {
            const Label truth = i == 0 ? Label::Benign : i == 1 ? Label::Malware
                                                                 : (rng() & 1 ? Label::Malware : Label::Benign);
            // Every third set uses a coarse grid so ties are common.
            const double s = t % 3 == 0 ? static_cast<double>(rng() % 5) / 4.0
                                        : std::uniform_real_distribution<>(0, 1)(rng);
            p.push_back({std::to_string(i), truth, s >= 0.5 ? Label::Malware : Label::Benign, s});
        }
        worst = std::max(worst, std::abs(roc_auc(p) - brute_force_auc(p)));
    }
    return {worst <= 1e-12, fmt("100 sets, max |diff| = %.3g", worst)};
}

Outcome byte_image_round_trip()
{
    std::mt19937_64 rng(611);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t len = 1 + rng() % (64 * 1024);
        const Bytes data = random_bytes(len, rng());
        for (auto mode : {ColorMode::Grayscale, ColorMode::Rgb}) {
            if (decode_canvas(encode_canvas(data, mode), len) != data) {
                return {false, fmt("sequence %d (%zu bytes) did not invert", t, len)};
            }
        }
    }
    const Bytes sample = random_bytes(5000, 1);
    for (const auto& spec : all_image_specs()) {
        const ByteImage img = render_bytes(sample, spec);
        const std::size_t want = std::size_t{spec.side()} * spec.side() * spec.channel_count();
        if (img.width() != spec.side() || img.height() != spec.side() || img.pixels.size() != want) {
            return {false, "wrong dimensions for " + spec.tag()};
        }
    }
    return {true, "1000 sequences x 2 modes invert exactly; 6 specs sized correctly"};
}

Outcome axml_golden_and_fuzz()
{
    const auto cases = golden_axml_cases();
    bool saw_sms = false, saw_contacts = false;
    for (const auto& g : cases) {
        const ManifestModel m = decode_axml(ByteView(g.data));
        if (m.permissions != g.expected_permissions || m.raw_xml != g.expected_xml ||
            reference_parse(m.raw_xml) != m.root) {
            return {false, "golden mismatch: " + g.name};
        }
        for (const auto& p : m.permissions) {
            saw_sms |= p == "android.permission.SEND_SMS";
            saw_contacts |= p == "android.permission.READ_CONTACTS";
        }
    }
    if (cases.size() < 5 || !saw_sms || !saw_contacts) {
        return {false, "golden corpus too small or missing SEND_SMS / READ_CONTACTS"};
    }
    std::mt19937_64 rng(612);
    int rejected = 0;
    for (int i = 0; i < 10000; ++i) {
        Bytes b = cases[i % cases.size()].data;
        for (int k = 0, edits = 1 + static_cast<int>(rng() % 3); k < edits && !b.empty(); ++k) {
            switch (rng() % 4) {
            case 0:
                b[rng() % b.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
                break;
            case 1:
                b.resize(rng() % b.size());
                break;
            case 2:
                if (b.size() >= 4) set32(b, (rng() % (b.size() / 4)) * 4, static_cast<std::uint32_t>(rng()));
                break;
            default:
                b.insert(b.begin() + static_cast<std::ptrdiff_t>(rng() % b.size()), static_cast<std::uint8_t>(rng()));
            }
        }
        try {
            decode_axml(ByteView(b));
        } catch (const Error&) {
            ++rejected;
        } catch (const std::exception& e) {
            return {false, fmt("mutation %d escaped with a non-library exception: %s", i, e.what())};
        }
    }
    return {true, fmt("%zu golden manifests exact; 10000 mutations, 0 crashes (%d rejected)", cases.size(),
                      rejected)};
}

Outcome prompt_fidelity()
{
    const std::string b = sha256_hex(benign_prompt_template);
    const std::string m = sha256_hex(malware_prompt_template);
    const bool pass = b == "fdf17f28f4fc249980f56207a6104773f0ab02f1c715335317d233b4256501f8" &&
                      m == "572326df0f8d2fe83553f7ee843121054f7521ebf6b668299a3c3efa357c7f2c";
    return {pass, "benign " + b.substr(0, 12) + "..., malware " + m.substr(0, 12) + "..."};
}

Outcome split_determinism()
{
    DatasetManifest base;
    for (int i = 0; i < 100; ++i) {
        DatasetRecord r;
        r.sample_id = sha256_hex("sample-" + std::to_string(i));
        r.image_path = r.sample_id + ".png";
        r.label = i < 50 ? Label::Benign : Label::Malware;
        base.records.push_back(r);
    }
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const DatasetManifest a = assign_splits(base, seed);
        if (a.records != assign_splits(base, seed).records) {
            return {false, fmt("seed %llu is not deterministic", static_cast<unsigned long long>(seed))};
        }
        std::size_t counts[2][3] = {};
        std::set<std::string> seen;
        for (const auto& r : a.records) {
            ++counts[static_cast<int>(r.label)][static_cast<int>(r.split)];
            if (!seen.insert(r.sample_id).second) {
                return {false, "sample appears in more than one split"};
            }
        }
        if (seen.size() != 100) return {false, "records lost during splitting"};
        for (int l = 0; l < 2; ++l) {
            const double quota[3] = {40, 5, 5};
            for (int k = 0; k < 3; ++k) {
                if (std::abs(static_cast<double>(counts[l][k]) - quota[k]) > 1) {
                    return {false, fmt("seed %llu per-label deviation > 1", static_cast<unsigned long long>(seed))};
                }
            }
        }
        if (counts[0][0] + counts[1][0] != 80 || counts[0][1] + counts[1][1] != 10 ||
            counts[0][2] + counts[1][2] != 10) {
            return {false, fmt("seed %llu is not 80/10/10", static_cast<unsigned long long>(seed))};
        }
    }
    return {true, "100 seeds: 80/10/10, 40/5/5 per label, no leakage"};
}

Outcome baseline_end_to_end()
{
    TempDir tmp;
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 50, 615);
    const fs::path img = tmp.path() / "img";
    const fs::path manifest = tmp.path() / "manifest.jsonl";
    const fs::path model = tmp.path() / "model.txt";
    const fs::path preds = tmp.path() / "predictions.csv";
    const fs::path report_json = tmp.path() / "report.json";
    const std::vector<std::vector<std::string>> steps = {
        {"convert", "--input", (tmp.path() / "in" / "apks").string(), "--output", img.string(), "--spec",
         "grayscale_128"},
        {"dataset", "--images", img.string(), "--labels", corpus.labels_csv.string(), "--output", manifest.string(),
         "--seed", "7", "--fractions", "0.6,0.1,0.3"},
        {"train-baseline", "--manifest", manifest.string(), "--output", model.string()},
        {"predict", "--manifest", manifest.string(), "--model", model.string(), "--output", preds.string()},
        {"evaluate", "--predictions", preds.string(), "--json", report_json.string()},
    };
    for (const auto& step : steps) {
        const CliResult r = run_cli(step);
        if (r.code != cli::exit_ok) return {false, step[0] + " exited " + std::to_string(r.code) + ": " + r.err};
    }
    if (!fs::exists(report_json)) return {false, "evaluate wrote no report"};
    // Unrounded values, from the same predictions file evaluate consumed.
    const MetricsReport rep = report(parse_predictions_csv(detail::read_text_file(preds)));
    const double acc = rep.accuracy;
    const double auc = rep.roc_auc.value_or(0.0);
    const std::size_t n = rep.n;

    // Central differences against the analytic gradient at 100 random points.
    std::mt19937_64 rng(616);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::vector<Example> data;
    for (int i = 0; i < 32; ++i) {
        Example ex{FeatureVector(16), i % 2 ? Label::Malware : Label::Benign};
        for (auto& v : ex.features) v = std::uniform_real_distribution<double>(0, 1)(rng);
        data.push_back(ex);
    }
    std::vector<const Example*> batch;
    for (const auto& ex : data) batch.push_back(&ex);
    double worst = 0;
    for (int point = 0; point < 100; ++point) {
        LinearModel m;
        m.weights.resize(16);
        for (auto& w : m.weights) w = u(rng);
        m.bias = u(rng);
        const Gradient g = gradient(m, batch, 1e-3);
        for (std::size_t i = 0; i <= 16; ++i) {
            double& param = i < 16 ? m.weights[i] : m.bias;
            const double saved = param;
            param = saved + 1e-6;
            const double up = loss(m, batch, 1e-3);
            param = saved - 1e-6;
            const double down = loss(m, batch, 1e-3);
            param = saved;
            const double analytic = i < 16 ? g.weights[i] : g.bias;
            worst = std::max(worst, std::abs((up - down) / 2e-6 - analytic) / std::max(1.0, std::abs(analytic)));
        }
    }
    const bool pass = acc >= 0.95 && auc >= 0.99 && worst <= 1e-5;
    return {pass, fmt("holdout n=%zu accuracy %.4f, AUC %.4f; gradient max rel err %.2g", n, acc, auc, worst)};
}

} // namespace

int main()
{
    for (const char* v : {"ANNOTATOR_MODE", "ANNOTATOR_ENDPOINT", "ANNOTATOR_MODEL", "ANNOTATOR_API_KEY"}) {
        ::unsetenv(v);
    }
    const std::vector<Criterion> criteria = {
        {"degenerate-predictor metrics", 1, degenerate_predictor_metrics},
        {"roc-auc oracle equivalence", 10, auc_oracle},
        {"byte-image round-trip", 30, byte_image_round_trip},
        {"axml golden suite and fuzz", 60, axml_golden_and_fuzz},
        {"prompt fidelity", 0, prompt_fidelity},
        {"split determinism and stratification", 0, split_determinism},
        {"baseline end-to-end", 60, baseline_end_to_end},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", c.budget_seconds);
        }
        failures += !o.pass;
        std::printf("%s  %-38s %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), o.detail.c_str(), secs);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
    return failures == 0 ? 0 : 1;
}
