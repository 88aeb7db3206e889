#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "axml_writer.hpp"
#include "zip_writer.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("apkvis_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_bytes(const fs::path& p, const Bytes& b)
{
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

inline void write_text(const fs::path& p, const std::string& s)
{
    write_bytes(p, to_bytes(s));
}

inline Bytes read_bytes(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Fake dex payload: "dex\n035\0" magic then deterministic noise.
inline Bytes fake_dex(std::size_t size, std::uint64_t seed)
{
    static const std::uint8_t magic[] = {'d', 'e', 'x', '\n', '0', '3', '5', 0};
    Bytes b(size);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < size; ++i) {
        b[i] = i < sizeof(magic) ? magic[i] : static_cast<std::uint8_t>(rng());
    }
    return b;
}

inline Bytes random_bytes(std::size_t size, std::uint64_t seed)
{
    Bytes b(size);
    std::mt19937_64 rng(seed);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return b;
}

/// A small but structurally complete APK.
inline Bytes simple_apk(const std::string& package, const std::vector<std::string>& permissions,
                        const Bytes& dex, const std::string& extra_strings = {})
{
    ZipWriter z;
    z.add("AndroidManifest.xml", manifest_axml(package, permissions));
    Bytes d = dex;
    d.insert(d.end(), extra_strings.begin(), extra_strings.end());
    z.add("classes.dex", d);
    z.add("res/layout/main.xml", "<LinearLayout/>");
    z.add("META-INF/MANIFEST.MF", "Manifest-Version: 1.0\n");
    return z.finish();
}

} // namespace testsupport
