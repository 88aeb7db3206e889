#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "apkvis/apk_container.hpp"
#include "apkvis/byte_image.hpp"
#include "apkvis/dataset.hpp"
#include "apkvis/digest.hpp"
#include "apkvis/png_io.hpp"

namespace apkvis {

/// Runs task(i) for i in [0, count) on up to `workers` threads; each
/// thread claims the next unclaimed index. Tasks must not throw.
inline void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task)
{
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                task(i);
            }
        });
    }
}

/// Bytes handed to the image encoder for one APK.
inline Bytes source_bytes(const ApkArchive& archive, CodeSource source)
{
    return collect_code_bytes(archive, source);
}

inline ByteImage apk_to_image(const ApkArchive& archive, const ImageSpec& spec, CodeSource source = CodeSource::DexOnly)
{
    return render_bytes(source_bytes(archive, source), spec);
}

struct ConvertedImage {
    ByteImage image;
    std::filesystem::path png_path;
};

/// Renders `spec` for the APK at `path` and writes
/// `<out_dir>/<sha256-of-apk>_<mode>_<res>.png`.
inline ConvertedImage apk_to_image(const std::filesystem::path& path, const ImageSpec& spec,
                                   const std::filesystem::path& out_dir, CodeSource source = CodeSource::DexOnly)
{
    const ApkArchive archive = open_apk(path);
    ConvertedImage out;
    out.image = apk_to_image(archive, spec, source);
    out.png_path = out_dir / image_file_name(sha256_hex(archive.raw_bytes()), spec);
    std::filesystem::create_directories(out_dir);
    write_png(out.png_path, out.image);
    return out;
}

} // namespace apkvis
