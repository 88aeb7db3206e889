#pragma once

// Subcommands: convert, extract-text, dataset, train-baseline, predict,
// evaluate.
//
// Exit codes: 0 success, 1 failure (some or all inputs failed),
// 2 usage or configuration error. Machine outputs are JSON Lines or CSV.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "apkvis/annotator.hpp"
#include "apkvis/apk_container.hpp"
#include "apkvis/axml.hpp"
#include "apkvis/baseline.hpp"
#include "apkvis/byte_image.hpp"
#include "apkvis/dataset.hpp"
#include "apkvis/digest.hpp"
#include "apkvis/metrics.hpp"
#include "apkvis/pipeline.hpp"
#include "apkvis/png_io.hpp"
#include "apkvis/text_features.hpp"

namespace apkvis::cli {

namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<ImageSpec> parse_spec_list(const std::string& list, Resample resample)
{
    if (list.empty() || list == "all") {
        const auto all = all_image_specs(resample);
        return {all.begin(), all.end()};
    }
    std::vector<ImageSpec> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto spec = parse_image_spec(item);
        if (!spec) {
            throw UsageError("unknown image spec '" + item + "' (expected e.g. grayscale_128, rgb_512 or all)");
        }
        spec->resample = resample;
        if (std::find(out.begin(), out.end(), *spec) == out.end()) {
            out.push_back(*spec);
        }
    }
    return out;
}

/// Files are taken as given; directories contribute every `*.apk` below
/// them. Result is sorted and unique.
inline std::vector<fs::path> collect_apks(const std::vector<std::string>& inputs)
{
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        const fs::path p(in);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            for (const auto& entry : fs::recursive_directory_iterator(p)) {
                if (!entry.is_regular_file()) continue;
                std::string ext = entry.path().extension().string();
                std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
                if (ext == ".apk") out.push_back(entry.path());
            }
        } else if (fs::exists(p, ec)) {
            out.push_back(p);
        } else {
            throw UsageError("input does not exist: " + in);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline nlohmann::ordered_json error_json(const std::exception& e)
{
    nlohmann::ordered_json j;
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        j["error_code"] = to_string(err->code());
    } else {
        j["error_code"] = "Internal";
    }
    j["error"] = e.what();
    return j;
}

inline void write_jsonl(const fs::path& path, const std::vector<nlohmann::ordered_json>& lines)
{
    std::string text;
    for (const auto& l : lines) {
        text += l.dump() + "\n";
    }
    detail::write_text_file(path, text);
}

inline unsigned default_jobs()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------- convert

struct ConvertOptions {
    std::vector<std::string> inputs;
    fs::path output;
    std::string specs = "all";
    CodeSource source = CodeSource::DexOnly;
    Resample resample = Resample::NearestNeighbor;
    unsigned jobs = 1;
};

/// Writes one PNG per (APK, spec) and `<output>/index.jsonl`.
inline int cmd_convert(const ConvertOptions& opt, std::ostream& out, std::ostream& err)
{
    const auto specs = parse_spec_list(opt.specs, opt.resample);
    const auto apks = collect_apks(opt.inputs);
    if (apks.empty()) {
        err << "convert: no APK files found in the given inputs\n";
        return exit_usage;
    }
    fs::create_directories(opt.output);

    std::vector<std::vector<nlohmann::ordered_json>> results(apks.size());
    parallel_for(apks.size(), opt.jobs, [&](std::size_t i) {
        auto& lines = results[i];
        try {
            const ApkArchive archive = open_apk(apks[i]);
            const std::string id = sha256_hex(archive.raw_bytes());
            const Bytes bytes = source_bytes(archive, opt.source);
            for (const auto& spec : specs) {
                const ByteImage image = render_bytes(bytes, spec);
                const fs::path png = opt.output / image_file_name(id, spec);
                write_png(png, image);
                nlohmann::ordered_json j;
                j["apk"] = apks[i].string();
                j["sample_id"] = id;
                j["spec"] = spec.tag();
                j["status"] = "ok";
                j["png"] = png.string();
                j["source_len"] = image.source_len;
                j["canvas_side"] = image.canvas_side;
                lines.push_back(std::move(j));
            }
        } catch (const std::exception& e) {
            lines.clear();
            nlohmann::ordered_json j;
            j["apk"] = apks[i].string();
            j["status"] = "error";
            j.update(error_json(e));
            lines.push_back(std::move(j));
        }
    });

    std::vector<nlohmann::ordered_json> index;
    std::size_t failed = 0;
    std::size_t written = 0;
    for (std::size_t i = 0; i < apks.size(); ++i) {
        for (auto& l : results[i]) {
            if (l["status"] == "error") {
                ++failed;
                err << "convert: " << apks[i].string() << ": " << l["error"].get<std::string>() << "\n";
            } else {
                ++written;
            }
            index.push_back(std::move(l));
        }
    }
    write_jsonl(opt.output / "index.jsonl", index);
    out << "converted " << (apks.size() - failed) << "/" << apks.size() << " APKs, wrote " << written
        << " images\n";
    return failed == 0 ? exit_ok : exit_failure;
}

// ----------------------------------------------------------- extract-text

struct ExtractOptions {
    std::vector<std::string> inputs;
    fs::path output;
    std::string specs = "all";
    fs::path labels;
    std::optional<Label> hypothesis;
    AnnotatorConfig annotator;
    EvidenceConfig evidence;
    std::size_t max_input_tokens = default_max_input_tokens;
    unsigned jobs = 1;
};

/// Per APK: `<id>.evidence.json`, `<id>.prompt.benign.txt`,
/// `<id>.prompt.malware.txt`; with an annotator also `<id>_<spec>.txt` for
/// each spec and `<id>.annotation.json`. Index: `extract_index.jsonl`.
inline int cmd_extract_text(const ExtractOptions& opt, std::ostream& out, std::ostream& err,
                            HttpPost post = detail::httplib_post)
{
    try {
        opt.annotator.validate();
    } catch (const Error& e) {
        err << "extract-text: " << e.what() << "\n";
        return exit_usage;
    }
    std::map<std::string, LabelEntry> labels;
    if (!opt.labels.empty()) {
        labels = parse_labels_csv(detail::read_text_file(opt.labels));
    }
    const bool annotating = opt.annotator.mode != AnnotatorMode::None;
    if (annotating && opt.labels.empty() && !opt.hypothesis) {
        err << "extract-text: annotation needs --labels or --hypothesis to choose the prompt\n";
        return exit_usage;
    }
    const auto specs = parse_spec_list(opt.specs, Resample::NearestNeighbor);
    const auto apks = collect_apks(opt.inputs);
    if (apks.empty()) {
        err << "extract-text: no APK files found in the given inputs\n";
        return exit_usage;
    }
    fs::create_directories(opt.output);
    Annotator annotator(opt.annotator, std::move(post));

    std::vector<nlohmann::ordered_json> results(apks.size());
    parallel_for(apks.size(), opt.jobs, [&](std::size_t i) {
        nlohmann::ordered_json j;
        j["apk"] = apks[i].string();
        try {
            const ApkArchive archive = open_apk(apks[i]);
            const std::string id = sha256_hex(archive.raw_bytes());
            j["sample_id"] = id;
            ManifestModel manifest;
            if (archive.contains("AndroidManifest.xml")) {
                try {
                    manifest = decode_axml(read_entry(archive, "AndroidManifest.xml"));
                } catch (const Error& e) {
                    j["manifest_error"] = e.what();
                }
            } else {
                j["manifest_error"] = "no AndroidManifest.xml";
            }
            const TextEvidence evidence = extract_evidence(archive, manifest, opt.evidence);
            nlohmann::ordered_json ev = to_json(evidence);
            ev["package_name"] = manifest.package_name;
            detail::write_text_file(opt.output / (id + ".evidence.json"), ev.dump(2) + "\n");

            const PromptInstance benign = build_prompt(evidence, Label::Benign, opt.max_input_tokens);
            const PromptInstance malware = build_prompt(evidence, Label::Malware, opt.max_input_tokens);
            detail::write_text_file(opt.output / (id + ".prompt.benign.txt"), benign.text());
            detail::write_text_file(opt.output / (id + ".prompt.malware.txt"), malware.text());
            j["status"] = "ok";

            if (annotating) {
                std::optional<Label> hyp = opt.hypothesis;
                if (auto it = labels.find(id); it != labels.end()) {
                    hyp = it->second.label;
                }
                if (!hyp) {
                    throw Error(ErrorCode::UnlabeledSample, id + " has no label to choose a prompt");
                }
                const PromptInstance& prompt = *hyp == Label::Malware ? malware : benign;
                const Annotation a = annotator.annotate(prompt);
                for (const auto& spec : specs) {
                    const std::string stem = id + "_" + spec.tag();
                    detail::write_text_file(opt.output / (stem + ".txt"), a.text + "\n");
                }
                nlohmann::ordered_json meta;
                meta["label_hypothesis"] = to_string(a.label_hypothesis);
                meta["provenance"] = to_string(a.provenance);
                meta["model_id"] = a.model_id;
                meta["prompt_digest"] = Annotator::prompt_digest(prompt);
                detail::write_text_file(opt.output / (id + ".annotation.json"), meta.dump(2) + "\n");
                j["annotation"] = "ok";
            }
        } catch (const std::exception& e) {
            j["status"] = "error";
            j.update(error_json(e));
        }
        results[i] = std::move(j);
    });

    std::size_t failed = 0;
    for (std::size_t i = 0; i < apks.size(); ++i) {
        if (results[i]["status"] == "error") {
            ++failed;
            err << "extract-text: " << apks[i].string() << ": " << results[i]["error"].get<std::string>() << "\n";
        }
    }
    write_jsonl(opt.output / "extract_index.jsonl", results);
    out << "extracted text from " << (apks.size() - failed) << "/" << apks.size() << " APKs"
        << (annotating ? " (annotated)" : "") << "\n";
    return failed == 0 ? exit_ok : exit_failure;
}

// ---------------------------------------------------------------- dataset

struct DatasetOptions {
    fs::path images;
    fs::path texts;
    fs::path labels;
    std::string spec = "grayscale_128";
    std::uint64_t seed = 0;
    SplitFractions fractions;
    fs::path output;
    BuildOptions build;
};

inline int cmd_dataset(const DatasetOptions& opt, std::ostream& out, std::ostream&)
{
    auto spec = parse_image_spec(opt.spec);
    if (!spec) {
        throw UsageError("unknown image spec '" + opt.spec + "'");
    }
    const auto labels = parse_labels_csv(detail::read_text_file(opt.labels));
    const fs::path images = fs::absolute(opt.images);
    const fs::path texts = opt.texts.empty() ? images : fs::absolute(opt.texts);
    const DatasetManifest m = build_manifest(images, texts, labels, *spec, opt.seed, opt.fractions, opt.build);
    if (opt.output.has_parent_path()) {
        fs::create_directories(opt.output.parent_path());
    }
    detail::write_text_file(opt.output, serialize_manifest(m));
    out << "manifest: " << m.records.size() << " records (train " << m.counts.split_total(Split::Train) << ", val "
        << m.counts.split_total(Split::Val) << ", test " << m.counts.split_total(Split::Test) << ")\n";
    return exit_ok;
}

// ---------------------------------------------------- train / predict glue

inline fs::path resolve_record_path(const std::string& stored, const fs::path& manifest_path)
{
    const fs::path p(stored);
    std::error_code ec;
    if (p.is_absolute() || fs::exists(p, ec)) {
        return p;
    }
    return manifest_path.parent_path() / p;
}

inline std::vector<Example> load_examples(const DatasetManifest& m, const fs::path& manifest_path,
                                          std::optional<Split> split, std::uint32_t pool_side,
                                          std::vector<std::string>* ids = nullptr)
{
    std::vector<Example> out;
    for (const auto& r : m.records) {
        if (split && r.split != *split) continue;
        const ByteImage img = load_byte_image(resolve_record_path(r.image_path, manifest_path), r.image_spec);
        out.push_back({featurize(img, pool_side), r.label});
        if (ids) ids->push_back(r.sample_id);
    }
    return out;
}

struct TrainOptions {
    fs::path manifest;
    fs::path output;
    std::uint32_t pool_side = 16;
    TrainConfig config;
};

inline int cmd_train_baseline(const TrainOptions& opt, std::ostream& out, std::ostream&)
{
    const DatasetManifest m = parse_manifest(detail::read_text_file(opt.manifest));
    const auto train_set = load_examples(m, opt.manifest, Split::Train, opt.pool_side);
    const auto val_set = load_examples(m, opt.manifest, Split::Val, opt.pool_side);
    if (train_set.empty()) {
        throw Error(ErrorCode::EmptyManifest, "manifest has no training records");
    }
    TrainHistory history;
    const LinearModel model = train(train_set, val_set, opt.config, opt.pool_side, &history);
    if (opt.output.has_parent_path()) {
        fs::create_directories(opt.output.parent_path());
    }
    detail::write_text_file(opt.output, serialize_model(model));
    out << "trained on " << train_set.size() << " samples (" << val_set.size() << " validation), "
        << history.train_loss.size() << " epochs, best epoch " << history.best_epoch
        << (history.stopped_early ? ", stopped early" : "") << "\n";
    return exit_ok;
}

struct PredictOptions {
    fs::path manifest;
    fs::path model;
    std::string split = "test";
    fs::path output;
};

inline int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream&)
{
    std::optional<Split> split;
    if (opt.split != "all") {
        split = parse_split(opt.split);
        if (!split) throw UsageError("unknown split '" + opt.split + "'");
    }
    const DatasetManifest m = parse_manifest(detail::read_text_file(opt.manifest));
    const LinearModel model = parse_model(detail::read_text_file(opt.model));
    std::vector<std::string> ids;
    const auto examples = load_examples(m, opt.manifest, split, model.pool_side, &ids);
    std::vector<PredictionRecord> preds;
    preds.reserve(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const Prediction p = predict(model, examples[i].features);
        preds.push_back({ids[i], examples[i].label, p.label, p.score});
    }
    if (opt.output.has_parent_path()) {
        fs::create_directories(opt.output.parent_path());
    }
    detail::write_text_file(opt.output, format_predictions_csv(preds));
    out << "wrote " << preds.size() << " predictions\n";
    return exit_ok;
}

// --------------------------------------------------------------- evaluate

struct EvaluateOptions {
    fs::path predictions;
    fs::path json_output;
    int decimals = 4;
};

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream&)
{
    const auto preds = parse_predictions_csv(detail::read_text_file(opt.predictions));
    const MetricsReport r = report(preds);
    out << format_table(r, opt.decimals);
    if (!opt.json_output.empty()) {
        detail::write_text_file(opt.json_output, to_json(r, opt.decimals).dump(2) + "\n");
    }
    return exit_ok;
}

// ------------------------------------------------------------------- main

inline std::optional<double> optional_flag(const CLI::Option* opt, double value)
{
    return opt->count() > 0 ? std::optional<double>(value) : std::nullopt;
}

inline std::vector<std::string> read_lines(const fs::path& path)
{
    std::vector<std::string> out;
    std::istringstream in(detail::read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] != '#') out.push_back(line);
    }
    return out;
}

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
               HttpPost post = detail::httplib_post)
{
    CLI::App app{"APK to image/text multimodal dataset pipeline"};
    app.require_subcommand(1);

    ConvertOptions conv;
    conv.jobs = default_jobs();
    std::string conv_source = "dex";
    std::string conv_resample = "nearest";
    auto* convert = app.add_subcommand("convert", "Render APK bytes as grayscale/RGB PNG images");
    convert->add_option("--input", conv.inputs, "APK files or directories")->required();
    convert->add_option("--output", conv.output, "Output directory")->required();
    convert->add_option("--spec", conv.specs, "Comma list of <mode>_<res> or 'all'");
    convert->add_option("--source", conv_source, "dex or whole")->check(CLI::IsMember({"dex", "whole"}));
    convert->add_option("--resample", conv_resample, "nearest or bilinear")->check(CLI::IsMember({"nearest", "bilinear"}));
    convert->add_option("--jobs", conv.jobs, "Worker threads")->check(CLI::PositiveNumber);

    ExtractOptions ext;
    ext.jobs = default_jobs();
    std::string ext_annotator;
    std::string ext_hypothesis;
    std::string ext_dangerous;
    double temperature = 0, top_p = 0;
    int max_new_tokens = 0;
    auto* extract = app.add_subcommand("extract-text", "Extract text evidence, build prompts, annotate");
    extract->add_option("--input", ext.inputs, "APK files or directories")->required();
    extract->add_option("--output", ext.output, "Output directory (usually the image directory)")->required();
    extract->add_option("--spec", ext.specs, "Image specs whose stems name the annotation files");
    extract->add_option("--labels", ext.labels, "sample_id,label CSV choosing the prompt per sample");
    extract->add_option("--hypothesis", ext_hypothesis, "Prompt for unlabeled samples: benign or malware")
        ->check(CLI::IsMember({"benign", "malware"}));
    extract->add_option("--annotator", ext_annotator, "none, stub or live (default: ANNOTATOR_MODE)")
        ->check(CLI::IsMember({"none", "stub", "live"}));
    extract->add_option("--stub-dir", ext.annotator.stub_dir, "Directory of <digest>.txt stub replies");
    extract->add_option("--max-tokens", ext.max_input_tokens, "Prompt token bound");
    extract->add_option("--min-string-length", ext.evidence.min_string_length, "Shortest printable run kept");
    extract->add_option("--dangerous-permissions", ext_dangerous, "File with one permission name per line");
    auto* temp_opt = extract->add_option("--temperature", temperature, "Sampling temperature (pass-through)");
    auto* top_p_opt = extract->add_option("--top-p", top_p, "Nucleus sampling (pass-through)");
    auto* max_new_opt = extract->add_option("--max-new-tokens", max_new_tokens, "Completion length (pass-through)");
    extract->add_option("--jobs", ext.jobs, "Worker threads")->check(CLI::PositiveNumber);

    DatasetOptions ds;
    double f_train = 0.8, f_val = 0.1, f_test = 0.1;
    std::string fractions;
    auto* dataset = app.add_subcommand("dataset", "Pair images, annotations and labels into a split manifest");
    dataset->add_option("--images", ds.images, "Image directory")->required();
    dataset->add_option("--texts", ds.texts, "Annotation directory (default: image directory)");
    dataset->add_option("--labels", ds.labels, "sample_id,label[,family] CSV")->required();
    dataset->add_option("--spec", ds.spec, "Image spec, e.g. grayscale_128");
    dataset->add_option("--seed", ds.seed, "Split seed");
    dataset->add_option("--fractions", fractions, "train,val,test (default 0.8,0.1,0.1)");
    dataset->add_option("--output", ds.output, "Manifest path (JSON Lines)")->required();
    dataset->add_option("--created-at", ds.build.created_at, "Fixed timestamp for reproducible manifests");
    dataset->add_flag("--allow-missing", ds.build.allow_missing_images, "Skip labeled samples without an image");

    TrainOptions tr;
    auto* train_cmd = app.add_subcommand("train-baseline", "Train the logistic-regression baseline");
    train_cmd->add_option("--manifest", tr.manifest, "Dataset manifest")->required();
    train_cmd->add_option("--output", tr.output, "Model file")->required();
    train_cmd->add_option("--pool-side", tr.pool_side, "Feature grid side")->check(CLI::PositiveNumber);
    train_cmd->add_option("--epochs", tr.config.epochs, "Maximum epochs");
    train_cmd->add_option("--learning-rate", tr.config.learning_rate, "SGD step size");
    train_cmd->add_option("--l2", tr.config.l2, "L2 penalty");
    train_cmd->add_option("--batch-size", tr.config.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--patience", tr.config.patience, "Early-stopping patience");
    train_cmd->add_option("--seed", tr.config.seed, "Shuffle seed");

    PredictOptions pr;
    auto* predict_cmd = app.add_subcommand("predict", "Score manifest records with a trained baseline");
    predict_cmd->add_option("--manifest", pr.manifest, "Dataset manifest")->required();
    predict_cmd->add_option("--model", pr.model, "Model file")->required();
    predict_cmd->add_option("--split", pr.split, "train, val, test or all");
    predict_cmd->add_option("--output", pr.output, "Predictions CSV")->required();

    EvaluateOptions ev;
    auto* evaluate = app.add_subcommand("evaluate", "Compute metrics from a predictions CSV");
    evaluate->add_option("--predictions", ev.predictions, "sample_id,true,pred,score CSV")->required();
    evaluate->add_option("--json", ev.json_output, "Also write the report as JSON");
    evaluate->add_option("--decimals", ev.decimals, "Printed precision")->check(CLI::Range(0, 10));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return exit_usage;
    }

    try {
        if (*convert) {
            conv.source = conv_source == "whole" ? CodeSource::WholeFile : CodeSource::DexOnly;
            conv.resample = *parse_resample(conv_resample);
            return cmd_convert(conv, out, err);
        }
        if (*extract) {
            const auto stub_dir = ext.annotator.stub_dir;
            ext.annotator = AnnotatorConfig::from_env();
            if (!stub_dir.empty()) ext.annotator.stub_dir = stub_dir;
            if (ext_annotator == "none") ext.annotator.mode = AnnotatorMode::None;
            else if (ext_annotator == "stub") ext.annotator.mode = AnnotatorMode::Stub;
            else if (ext_annotator == "live") ext.annotator.mode = AnnotatorMode::Live;
            ext.annotator.temperature = optional_flag(temp_opt, temperature);
            ext.annotator.top_p = optional_flag(top_p_opt, top_p);
            if (max_new_opt->count() > 0) ext.annotator.max_new_tokens = max_new_tokens;
            if (!ext_hypothesis.empty()) ext.hypothesis = parse_label(ext_hypothesis);
            if (!ext_dangerous.empty()) ext.evidence.dangerous_permissions = read_lines(ext_dangerous);
            return cmd_extract_text(ext, out, err, std::move(post));
        }
        if (*dataset) {
            if (!fractions.empty()) {
                char c1 = 0, c2 = 0;
                std::istringstream fs_in(fractions);
                if (!(fs_in >> f_train >> c1 >> f_val >> c2 >> f_test) || c1 != ',' || c2 != ',') {
                    throw UsageError("--fractions must look like 0.8,0.1,0.1");
                }
            }
            ds.fractions = {f_train, f_val, f_test};
            try {
                ds.fractions.validate();
            } catch (const Error& e) {
                throw UsageError(e.what());
            }
            return cmd_dataset(ds, out, err);
        }
        if (*train_cmd) return cmd_train_baseline(tr, out, err);
        if (*predict_cmd) return cmd_predict(pr, out, err);
        if (*evaluate) return cmd_evaluate(ev, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? exit_usage : exit_failure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
    return exit_usage;
}

} // namespace apkvis::cli
