#include "fewshot/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fewshot/error.hpp"

namespace fewshot {

namespace {

inline uint8_t round_to_u8(double v) {
    long r = std::lround(v);
    return static_cast<uint8_t>(std::clamp(r, 0L, 255L));
}

} // namespace

RasterImage resize_bilinear(const RasterImage& img, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0)
        throw ConfigError("resize target must be positive, got " + std::to_string(out_w) + "x" +
                          std::to_string(out_h));
    if (img.empty()) throw DataError("resize_bilinear: empty input image");
    if (out_w == img.width && out_h == img.height) return img;

    RasterImage out(out_w, out_h, img.channels);
    const double sx = static_cast<double>(img.width) / out_w;
    const double sy = static_cast<double>(img.height) / out_h;

    for (int y = 0; y < out_h; ++y) {
        double src_y = (y + 0.5) * sy - 0.5;
        src_y = std::clamp(src_y, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(src_y);
        int y1 = std::min(y0 + 1, img.height - 1);
        double fy = src_y - y0;
        for (int x = 0; x < out_w; ++x) {
            double src_x = (x + 0.5) * sx - 0.5;
            src_x = std::clamp(src_x, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(src_x);
            int x1 = std::min(x0 + 1, img.width - 1);
            double fx = src_x - x0;
            for (int c = 0; c < img.channels; ++c) {
                double top = (1.0 - fx) * img.at(x0, y0, c) + fx * img.at(x1, y0, c);
                double bot = (1.0 - fx) * img.at(x0, y1, c) + fx * img.at(x1, y1, c);
                out.at(x, y, c) = round_to_u8((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

ImageTensor normalize(const RasterImage& img) {
    ImageTensor t(img.width, img.height, img.channels);
    for (size_t i = 0; i < img.data.size(); ++i) t.data[i] = img.data[i] / 255.0;
    return t;
}

RasterImage denormalize(const ImageTensor& t) {
    RasterImage img(t.width, t.height, t.channels);
    for (size_t i = 0; i < t.data.size(); ++i) img.data[i] = round_to_u8(t.data[i] * 255.0);
    return img;
}

RasterImage flip_horizontal(const RasterImage& img) {
    RasterImage out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
    return out;
}

RasterImage rotate_bilinear(const RasterImage& img, double degrees) {
    const double rad = degrees * 3.14159265358979323846 / 180.0;
    const double cs = std::cos(rad);
    const double sn = std::sin(rad);
    const double cx = (img.width - 1) / 2.0;
    const double cy = (img.height - 1) / 2.0;

    RasterImage out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // inverse map: rotate the destination point back by -degrees
            double dx = x - cx;
            double dy = y - cy;
            double src_x = cs * dx + sn * dy + cx;
            double src_y = -sn * dx + cs * dy + cy;
            if (src_x < -1.0 || src_x > img.width || src_y < -1.0 || src_y > img.height)
                continue; // stays black
            int x0 = static_cast<int>(std::floor(src_x));
            int y0 = static_cast<int>(std::floor(src_y));
            double fx = src_x - x0;
            double fy = src_y - y0;
            for (int c = 0; c < img.channels; ++c) {
                auto sample = [&](int sx, int sy) -> double {
                    if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height) return 0.0;
                    return img.at(sx, sy, c);
                };
                double top = (1.0 - fx) * sample(x0, y0) + fx * sample(x0 + 1, y0);
                double bot = (1.0 - fx) * sample(x0, y0 + 1) + fx * sample(x0 + 1, y0 + 1);
                out.at(x, y, c) = round_to_u8((1.0 - fy) * top + fy * bot);
            }
        }
    }
    return out;
}

} // namespace fewshot
