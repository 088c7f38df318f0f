#include "fewshot/augment.hpp"

#include <algorithm>
#include <cmath>

#include "fewshot/error.hpp"
#include "fewshot/preprocess.hpp"
#include "fewshot/rng.hpp"

namespace fewshot {

namespace {

inline uint8_t round_clamp_u8(double v) {
    long r = std::lround(v);
    return static_cast<uint8_t>(std::clamp(r, 0L, 255L));
}

void scale_brightness(RasterImage& img, double factor) {
    if (factor == 1.0) return;
    for (auto& v : img.data) v = round_clamp_u8(v * factor);
}

double mean_luma(const RasterImage& img) {
    double sum = 0.0;
    for (size_t p = 0; p < img.pixel_count(); ++p)
        sum += luma601(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
    return sum / static_cast<double>(img.pixel_count());
}

void scale_contrast(RasterImage& img, double factor) {
    if (factor == 1.0) return;
    const double pivot = mean_luma(img);
    for (auto& v : img.data) v = round_clamp_u8((v - pivot) * factor + pivot);
}

void scale_saturation(RasterImage& img, double factor) {
    if (factor == 1.0) return;
    for (size_t p = 0; p < img.pixel_count(); ++p) {
        double l = luma601(img.data[p * 3], img.data[p * 3 + 1], img.data[p * 3 + 2]);
        for (int c = 0; c < 3; ++c) {
            double v = img.data[p * 3 + c];
            img.data[p * 3 + c] = round_clamp_u8(l + (v - l) * factor);
        }
    }
}

void apply_gamma(RasterImage& img, double gamma) {
    if (gamma == 1.0) return;
    std::array<uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v)
        lut[v] = round_clamp_u8(255.0 * std::pow(v / 255.0, gamma));
    for (auto& v : img.data) v = lut[v];
}

} // namespace

RasterImage augment(const RasterImage& img, const AugSpec& spec, uint64_t seed) {
    if (img.channels != 3) throw DataError("augment expects a 3-channel image");

    Rng rng(seed);
    RasterImage out = img;

    // draw order is part of the contract; every step consumes its draw
    double u_flip = rng.next_double();
    if (u_flip < spec.hflip_prob) out = flip_horizontal(out);

    double angle = rng.uniform(-spec.max_rotation_deg, spec.max_rotation_deg);
    if (angle != 0.0) out = rotate_bilinear(out, angle);

    scale_brightness(out, 1.0 + rng.uniform(-spec.brightness_jitter, spec.brightness_jitter));
    scale_contrast(out, 1.0 + rng.uniform(-spec.contrast_jitter, spec.contrast_jitter));
    scale_saturation(out, 1.0 + rng.uniform(-spec.saturation_jitter, spec.saturation_jitter));
    apply_gamma(out, rng.uniform(spec.gamma_range.first, spec.gamma_range.second));

    if (spec.apply_clahe) out = clahe(out, spec.clahe);
    return out;
}

} // namespace fewshot
