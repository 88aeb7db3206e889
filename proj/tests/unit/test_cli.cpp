#include <gtest/gtest.h>

#include <cstdlib>

#include "support/corpus.hpp"

using namespace apkvis;
using namespace testsupport;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override
    {
        for (const char* v : {"ANNOTATOR_MODE", "ANNOTATOR_ENDPOINT", "ANNOTATOR_MODEL", "ANNOTATOR_API_KEY"}) {
            ::unsetenv(v);
        }
    }
    TempDir tmp;
};

std::vector<nlohmann::json> read_jsonl(const fs::path& p)
{
    std::vector<nlohmann::json> out;
    for (const auto& line : read_lines(p)) out.push_back(nlohmann::json::parse(line));
    return out;
}

HttpPost unreachable_post(int* calls)
{
    return [calls](const std::string&, const std::string&, const std::string&, std::chrono::seconds) {
        ++*calls;
        HttpResult r;
        r.error = "refused";
        return r;
    };
}

} // namespace

TEST_F(Cli, HelpAndUsageErrors)
{
    EXPECT_EQ(run_cli({"--help"}).code, cli::exit_ok);
    EXPECT_EQ(run_cli({}).code, cli::exit_usage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, cli::exit_usage);
    EXPECT_EQ(run_cli({"convert", "--output", tmp.path().string()}).code, cli::exit_usage);
    EXPECT_EQ(run_cli({"convert", "--input", (tmp.path() / "nope").string(), "--output", "x"}).code, cli::exit_usage);
    EXPECT_EQ(run_cli({"convert", "--input", tmp.path().string(), "--output", "x", "--source", "apk"}).code,
              cli::exit_usage);
}

TEST_F(Cli, ConvertWritesEveryImageAndAnIndex)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 2, 1);
    const fs::path out = tmp.path() / "img";
    const auto r = run_cli({"convert", "--input", (tmp.path() / "in" / "apks").string(), "--input",
                            corpus.apks[0].string(), "--output", out.string(), "--jobs", "2"});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    std::size_t pngs = 0;
    for (const auto& e : fs::directory_iterator(out)) pngs += e.path().extension() == ".png";
    EXPECT_EQ(pngs, 4u * 6u);
    const auto index = read_jsonl(out / "index.jsonl");
    ASSERT_EQ(index.size(), 24u);
    for (const auto& j : index) {
        EXPECT_EQ(j["status"], "ok");
        EXPECT_TRUE(fs::exists(j["png"].get<std::string>()));
        EXPECT_GT(j["source_len"].get<std::uint64_t>(), 2048u);
    }
    for (const auto& id : corpus.ids) {
        for (const auto& spec : all_image_specs()) {
            const auto img = load_byte_image(out / image_file_name(id, spec), spec);
            EXPECT_EQ(img.width(), spec.side());
            EXPECT_EQ(img.spec.color_mode, spec.color_mode);
        }
    }
}

TEST_F(Cli, ConvertOutputIsDeterministic)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 1, 2);
    for (const char* d : {"a", "b"}) {
        ASSERT_EQ(run_cli({"convert", "--input", corpus.apks[0].string(), "--output", (tmp.path() / d).string(),
                           "--spec", "rgb_256,grayscale_128", "--jobs", d[0] == 'a' ? "1" : "3"})
                      .code,
                  cli::exit_ok);
    }
    for (const char* tag : {"rgb_256", "grayscale_128"}) {
        const std::string name = corpus.ids[0] + "_" + tag + ".png";
        EXPECT_EQ(read_bytes(tmp.path() / "a" / name), read_bytes(tmp.path() / "b" / name));
    }
    EXPECT_FALSE(fs::exists(tmp.path() / "a" / (corpus.ids[0] + "_rgb_512.png")));
}

TEST_F(Cli, ConvertReportsCorruptApks)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 1, 3);
    write_bytes(tmp.path() / "in" / "apks" / "zz_broken.apk", random_bytes(500, 4));
    const auto r = run_cli({"convert", "--input", (tmp.path() / "in" / "apks").string(), "--output",
                            (tmp.path() / "out").string(), "--spec", "grayscale_128"});
    EXPECT_EQ(r.code, cli::exit_failure);
    EXPECT_NE(r.err.find("zz_broken.apk"), std::string::npos);
    const auto index = read_jsonl(tmp.path() / "out" / "index.jsonl");
    ASSERT_EQ(index.size(), 3u);
    EXPECT_EQ(index.back()["status"], "error");
    EXPECT_EQ(index.back()["error_code"], "NotAZip");
    EXPECT_TRUE(fs::exists(tmp.path() / "out" / image_file_name(corpus.ids[0], ImageSpec{})));
}

TEST_F(Cli, ConvertWithNothingToDo)
{
    fs::create_directories(tmp.path() / "empty");
    const auto r = run_cli({"convert", "--input", (tmp.path() / "empty").string(), "--output",
                            (tmp.path() / "out").string()});
    EXPECT_EQ(r.code, cli::exit_usage);
    EXPECT_FALSE(fs::exists(tmp.path() / "out" / "index.jsonl"));
    EXPECT_EQ(run_cli({"convert", "--input", (tmp.path() / "empty").string(), "--output", "o", "--spec", "rgb_64"})
                  .code,
              cli::exit_usage);
}

TEST_F(Cli, ExtractTextWithoutAnnotator)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 1, 5);
    const fs::path out = tmp.path() / "txt";
    const auto r = run_cli({"extract-text", "--input", corpus.apks[1].string(), "--output", out.string()});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    const std::string& id = corpus.ids[1];
    const auto ev = nlohmann::json::parse(detail::read_text_file(out / (id + ".evidence.json")));
    EXPECT_EQ(ev["package_name"], "com.bad.app1");
    const auto malware_prompt = read_bytes(out / (id + ".prompt.malware.txt"));
    const auto benign_prompt = read_bytes(out / (id + ".prompt.benign.txt"));
    EXPECT_NE(malware_prompt, benign_prompt);
    EXPECT_NE(std::string(benign_prompt.begin(), benign_prompt.end()).find("android.permission.INTERNET"),
              std::string::npos);
    EXPECT_FALSE(fs::exists(out / (id + "_grayscale_128.txt")));
}

TEST_F(Cli, ExtractTextWithStubAnnotator)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 1, 6);
    const fs::path out = tmp.path() / "txt";
    const fs::path stubs = tmp.path() / "stubs";
    ASSERT_EQ(run_cli({"extract-text", "--input", (tmp.path() / "in" / "apks").string(), "--output", out.string()})
                  .code,
              cli::exit_ok);
    // Stub replies are keyed by the digest of the prompt the label selects.
    fs::create_directories(stubs);
    for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
        const std::string hyp = i % 2 ? "malware" : "benign";
        const auto prompt = read_bytes(out / (corpus.ids[i] + ".prompt." + hyp + ".txt"));
        write_text(stubs / (sha256_hex(prompt) + ".txt"), "Summary for\n" + hyp + " sample.\n");
    }
    auto r = run_cli({"extract-text", "--input", (tmp.path() / "in" / "apks").string(), "--output", out.string(),
                      "--labels", corpus.labels_csv.string(), "--annotator", "stub", "--stub-dir", stubs.string(),
                      "--spec", "grayscale_128,rgb_512"});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
        const std::string hyp = i % 2 ? "malware" : "benign";
        for (const char* tag : {"grayscale_128", "rgb_512"}) {
            const auto text = read_bytes(out / (corpus.ids[i] + "_" + tag + ".txt"));
            EXPECT_EQ(std::string(text.begin(), text.end()), "Summary for " + hyp + " sample.\n");
        }
        std::ifstream in(out / (corpus.ids[i] + ".annotation.json"));
        const auto meta = nlohmann::json::parse(in);
        EXPECT_EQ(meta["provenance"], "stub");
        EXPECT_EQ(meta["label_hypothesis"], hyp);
    }
    // A hypothesis with no stored reply is a per-sample failure.
    r = run_cli({"extract-text", "--input", corpus.apks[0].string(), "--output", out.string(), "--hypothesis",
                 "malware", "--annotator", "stub", "--stub-dir", stubs.string()});
    EXPECT_EQ(r.code, cli::exit_failure);
    EXPECT_EQ(read_jsonl(out / "extract_index.jsonl").at(0)["error_code"], "StubMiss");
}

TEST_F(Cli, ExtractTextConfigurationErrors)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 1, 7);
    int calls = 0;
    auto r = run_cli({"extract-text", "--input", corpus.apks[0].string(), "--output", (tmp.path() / "o").string(),
                      "--annotator", "live", "--hypothesis", "benign"},
                     unreachable_post(&calls));
    EXPECT_EQ(r.code, cli::exit_usage);
    EXPECT_NE(r.err.find("ANNOTATOR_ENDPOINT"), std::string::npos);
    EXPECT_EQ(calls, 0);
    r = run_cli({"extract-text", "--input", corpus.apks[0].string(), "--output", (tmp.path() / "o").string(),
                 "--annotator", "stub", "--stub-dir", tmp.path().string()});
    EXPECT_EQ(r.code, cli::exit_usage);
    ::setenv("ANNOTATOR_MODE", "sometimes", 1);
    EXPECT_EQ(run_cli({"extract-text", "--input", corpus.apks[0].string(), "--output", "o"}).code, cli::exit_usage);
}

TEST_F(Cli, ExtractTextLiveEndpointDown)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 1, 8);
    ::setenv("ANNOTATOR_MODE", "live", 1);
    ::setenv("ANNOTATOR_ENDPOINT", "http://127.0.0.1:9/v1/chat/completions", 1);
    int calls = 0;
    const auto r = run_cli({"extract-text", "--input", corpus.apks[0].string(), "--output",
                            (tmp.path() / "o").string(), "--hypothesis", "benign"},
                           unreachable_post(&calls));
    EXPECT_EQ(r.code, cli::exit_failure);
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(read_jsonl(tmp.path() / "o" / "extract_index.jsonl").at(0)["error_code"], "EndpointUnreachable");
}

TEST_F(Cli, DatasetSplitsHundredSamples)
{
    const fs::path img = tmp.path() / "img";
    fs::create_directories(img);
    const Bytes png = encode_png(128, 128, 1, Bytes(128 * 128, 9));
    std::string csv;
    for (int i = 0; i < 100; ++i) {
        const std::string id = sha256_hex("s" + std::to_string(i));
        write_bytes(img / image_file_name(id, ImageSpec{}), png);
        csv += id + (i < 50 ? ",benign\n" : ",malware\n");
    }
    write_text(tmp.path() / "labels.csv", csv);
    const fs::path manifest = tmp.path() / "m" / "manifest.jsonl";
    auto r = run_cli({"dataset", "--images", img.string(), "--labels", (tmp.path() / "labels.csv").string(),
                      "--output", manifest.string(), "--seed", "5", "--created-at", "2024-01-01T00:00:00Z"});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    EXPECT_NE(r.out.find("100 records (train 80, val 10, test 10)"), std::string::npos) << r.out;
    const auto lines = read_jsonl(manifest);
    ASSERT_EQ(lines.size(), 101u);
    EXPECT_EQ(lines[0]["created_at"], "2024-01-01T00:00:00Z");

    r = run_cli({"dataset", "--images", img.string(), "--labels", (tmp.path() / "labels.csv").string(), "--output",
                 manifest.string(), "--fractions", "0.5,0.25"});
    EXPECT_EQ(r.code, cli::exit_usage);
    r = run_cli({"dataset", "--images", img.string(), "--labels", (tmp.path() / "labels.csv").string(), "--output",
                 manifest.string(), "--fractions", "0.5,0.25,0.5"});
    EXPECT_EQ(r.code, cli::exit_usage);
}

TEST_F(Cli, EvaluateDegeneratePredictor)
{
    std::vector<PredictionRecord> preds;
    for (int i = 0; i < 34; ++i) {
        preds.push_back({"s" + std::to_string(i), i < 17 ? Label::Benign : Label::Malware, Label::Benign, 0.1});
    }
    write_text(tmp.path() / "p.csv", format_predictions_csv(preds));
    const auto r = run_cli({"evaluate", "--predictions", (tmp.path() / "p.csv").string(), "--decimals", "2",
                            "--json", (tmp.path() / "r.json").string()});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    EXPECT_NE(r.out.find("macro avg           0.50      0.25      0.50      0.33"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("zero-division"), std::string::npos);
    std::ifstream in(tmp.path() / "r.json");
    const auto j = nlohmann::json::parse(in);
    EXPECT_EQ(j["accuracy"], 0.5);
    EXPECT_EQ(j["per_class"]["malware"]["f1"], 0.0);
    write_text(tmp.path() / "bad.csv", "sample_id,true_label,predicted_label,score_malware\nx,benign,maybe,0.1\n");
    EXPECT_EQ(run_cli({"evaluate", "--predictions", (tmp.path() / "bad.csv").string()}).code, cli::exit_failure);
}

TEST_F(Cli, EndToEndBaseline)
{
    const auto corpus = write_tinted_corpus(tmp.path() / "in", 30, 9);
    const fs::path img = tmp.path() / "img";
    ASSERT_EQ(run_cli({"convert", "--input", (tmp.path() / "in" / "apks").string(), "--output", img.string(),
                       "--spec", "grayscale_128"})
                  .code,
              cli::exit_ok);
    const fs::path manifest = tmp.path() / "manifest.jsonl";
    ASSERT_EQ(run_cli({"dataset", "--images", img.string(), "--labels", corpus.labels_csv.string(), "--output",
                       manifest.string(), "--fractions", "0.6,0.1,0.3"})
                  .code,
              cli::exit_ok);
    const fs::path model = tmp.path() / "model.txt";
    auto r = run_cli({"train-baseline", "--manifest", manifest.string(), "--output", model.string(), "--epochs",
                      "60", "--pool-side", "8"});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    EXPECT_EQ(parse_model(detail::read_text_file(model)).pool_side, 8u);
    const fs::path preds = tmp.path() / "preds.csv";
    r = run_cli({"predict", "--manifest", manifest.string(), "--model", model.string(), "--output", preds.string()});
    ASSERT_EQ(r.code, cli::exit_ok) << r.err;
    const auto records = parse_predictions_csv(detail::read_text_file(preds));
    EXPECT_EQ(records.size(), 18u);
    const MetricsReport rep = report(records);
    EXPECT_GE(rep.accuracy, 0.95);
    EXPECT_GE(*rep.roc_auc, 0.99);
    r = run_cli({"predict", "--manifest", manifest.string(), "--model", model.string(), "--output", preds.string(),
                 "--split", "everything"});
    EXPECT_NE(r.code, cli::exit_ok);
}
