#pragma once

#include <random>
#include <sstream>

#include "apkvis/cli.hpp"
#include "apkvis/digest.hpp"
#include "support/fixtures.hpp"

namespace testsupport {

/// Drives `apkvis::cli::run` in-process with captured streams.
struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

inline CliResult run_cli(std::vector<std::string> args, apkvis::HttpPost post = apkvis::detail::httplib_post)
{
    args.insert(args.begin(), "apkvis");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliResult r;
    r.code = apkvis::cli::run(static_cast<int>(argv.size()), argv.data(), out, err, std::move(post));
    r.out = out.str();
    r.err = err.str();
    return r;
}

/// Benign APKs carry dark dex bytes, malware APKs bright ones.
struct TintedCorpus {
    std::vector<fs::path> apks;
    std::vector<std::string> ids;
    fs::path labels_csv;
};

inline TintedCorpus write_tinted_corpus(const fs::path& dir, std::size_t per_class, std::uint64_t seed)
{
    fs::create_directories(dir / "apks");
    std::mt19937_64 rng(seed);
    TintedCorpus c;
    std::string csv = "sample_id,label\n";
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const bool malware = i % 2 == 1;
        Bytes dex = fake_dex(2048 + rng() % 30000, rng());
        for (std::size_t k = 8; k < dex.size(); ++k) {
            dex[k] = static_cast<std::uint8_t>(malware ? 150 + dex[k] % 106 : dex[k] % 106);
        }
        const std::string pkg = std::string(malware ? "com.bad.app" : "org.good.app") + std::to_string(i);
        const Bytes apk = simple_apk(pkg, {"android.permission.INTERNET"}, dex);
        const fs::path path = dir / "apks" / (pkg + ".apk");
        write_bytes(path, apk);
        const std::string id = apkvis::sha256_hex(apk);
        c.apks.push_back(path);
        c.ids.push_back(id);
        csv += id + (malware ? ",malware\n" : ",benign\n");
    }
    c.labels_csv = dir / "labels.csv";
    write_text(c.labels_csv, csv);
    return c;
}

inline std::vector<std::string> read_lines(const fs::path& p)
{
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

} // namespace testsupport
