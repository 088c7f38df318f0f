#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fewshot/image.hpp"
#include "fewshot/rng.hpp"

namespace fixtures {

// 16x16 grayscale image containing every intensity exactly once.
inline fewshot::RasterImage full_ramp16() {
    fewshot::RasterImage img(16, 16, 1);
    for (int i = 0; i < 256; ++i) img.data[i] = static_cast<uint8_t>(i);
    return img;
}

// 64x64 grayscale noise, fixed seed. Input of the tiled CLAHE golden.
inline fewshot::RasterImage noise64(uint64_t seed = 42) {
    fewshot::RasterImage img(64, 64, 1);
    fewshot::Rng rng(seed);
    for (auto& v : img.data) v = static_cast<uint8_t>(rng.next_below(256));
    return img;
}

// Bright disc on a dark background, roughly fundus-shaped.
inline fewshot::RasterImage disc_image(int size = 64, double radius_frac = 0.3) {
    fewshot::RasterImage img(size, size, 3);
    const double c = (size - 1) / 2.0;
    const double r = radius_frac * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double d = std::sqrt((x - c) * (x - c) + (y - c) * (y - c));
            const uint8_t v = d <= r ? 220 : 25;
            img.at(x, y, 0) = v;
            img.at(x, y, 1) = static_cast<uint8_t>(v / 2);
            img.at(x, y, 2) = static_cast<uint8_t>(v / 4);
        }
    }
    return img;
}

// Unique temporary directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("fewshot_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Baseline JPEG writer for decode tests (3-channel only).
void write_jpeg(const fewshot::RasterImage& img, const std::filesystem::path& path,
                int quality);

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace fixtures
