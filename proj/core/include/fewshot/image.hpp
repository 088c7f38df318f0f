#pragma once

#include <cstdint>
#include <vector>

namespace fewshot {

/// 8-bit raster image, row-major, channel-interleaved. channels is 1 or 3.
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<uint8_t> data;

    RasterImage() = default;
    RasterImage(int w, int h, int c, uint8_t fill = 0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    uint8_t& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    uint8_t at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    bool empty() const { return data.empty(); }

    bool operator==(const RasterImage&) const = default;
};

/// Real-valued image with samples in [0,1], same layout as RasterImage.
struct ImageTensor {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;

    ImageTensor() = default;
    ImageTensor(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    bool operator==(const ImageTensor&) const = default;
};

} // namespace fewshot
